#pragma once

/// \file
/// Counter-based random numbers with O(1) skip-ahead.
///
/// The generator is Philox4x64-10 keyed by (seed, 0). The g-th uniform of a
/// stream (g >= 1) is lane (g-1) % 4 of the block at counter (g-1) / 4, so
/// any index is reachable without generating the ones before it. Path i of a
/// simulation with D = d*M numbers per path always reads indices
/// (i-1)*D + 1 ... i*D, no matter how paths are spread over threads.

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace mcstats {

using Philox4x64Counter = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

/// Ten-round Philox4x64 bijection.
[[nodiscard]] Philox4x64Counter philox4x64(Philox4x64Counter counter, Philox4x64Key key) noexcept;

/// Raw 64 output bits at global index g >= 1.
[[nodiscard]] std::uint64_t random_bits_at(std::uint64_t seed, std::uint64_t g) noexcept;

/// Uniform in the open interval (0, 1) with 53 random bits.
[[nodiscard]] double uniform_at(std::uint64_t seed, std::uint64_t g) noexcept;

/// binary32 uniform in (0, 1) with 24 random bits; exactly representable.
[[nodiscard]] float uniform32_at(std::uint64_t seed, std::uint64_t g) noexcept;

[[nodiscard]] constexpr double bits_to_uniform(std::uint64_t bits) noexcept {
    const std::uint64_t top = bits >> 11;
    return top == 0 ? 0x1p-54 : static_cast<double>(top) * 0x1p-53;
}

[[nodiscard]] constexpr float bits_to_uniform32(std::uint64_t bits) noexcept {
    const std::uint64_t top = bits >> 40;
    return top == 0 ? 0x1p-25f : static_cast<float>(top) * 0x1p-24f;
}

/// (path i, coordinate j) with i >= 1 and 1 <= j <= dims_per_path.
struct StreamIndex {
    std::uint64_t path;
    std::uint64_t coordinate;

    /// g = (i - 1) * dims_per_path + j.
    [[nodiscard]] constexpr std::uint64_t global(std::uint64_t dims_per_path) const noexcept {
        return (path - 1) * dims_per_path + coordinate;
    }
};

/// A per-worker read position in a stream. Cheap to copy; caches one
/// Philox block so sequential reads cost a quarter of a block each.
class StreamCursor {
public:
    explicit StreamCursor(std::uint64_t seed, std::uint64_t next_index = 1) noexcept
        : seed_(seed), next_(next_index) {}

    /// Positions the cursor at the first number of `path` (1-based) when each
    /// path uses `dims` numbers per step over `steps` steps.
    void skip_to(std::uint64_t path, std::uint64_t dims, std::uint64_t steps) noexcept {
        next_ = (path - 1) * dims * steps + 1;
    }
    void seek(std::uint64_t g) noexcept { next_ = g; }

    [[nodiscard]] std::uint64_t position() const noexcept { return next_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_bits() noexcept;
    double next_uniform() noexcept { return bits_to_uniform(next_bits()); }
    float next_uniform32() noexcept { return bits_to_uniform32(next_bits()); }
    /// One uniform per normal variate, through the inverse CDF.
    double next_normal() noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t next_;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    Philox4x64Counter cache_{};
};

/// Standard normal quantile (Wichura's AS 241, about 1e-16 relative
/// accuracy). Throws std::domain_error unless 0 < u < 1.
[[nodiscard]] double normal_inverse_cdf(double u);

/// Fisher-Yates shuffle driven by Philox outputs, so a given seed yields the
/// same permutation on every platform.
template <typename T>
void seeded_shuffle(std::span<T> xs, std::uint64_t seed) {
    for (std::uint64_t i = xs.size(); i > 1; --i) {
        const std::uint64_t j = random_bits_at(seed, i) % i;
        std::swap(xs[i - 1], xs[j]);
    }
}

namespace detail {
// Unchecked kernel; u must lie in (0, 1).
[[nodiscard]] double normal_inverse_cdf_unchecked(double u) noexcept;
}  // namespace detail

}  // namespace mcstats
