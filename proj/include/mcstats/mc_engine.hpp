#pragma once

/// \file
/// Reproducible parallel Monte-Carlo pricing of binary options.
///
/// Paths are grouped into blocks of `block_size` consecutive paths. A block
/// is a pure function of (plan, payoff, block index): every path reads its
/// own fixed range of the random stream, so the per-block statistics do not
/// depend on how many workers run or which worker takes which block. The only
/// freedom left is the order in which block statistics are merged, and that
/// order is an explicit argument.

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "mcstats/exact.hpp"
#include "mcstats/moments.hpp"

namespace mcstats {

enum class PayoffKind : std::uint8_t { AssetOrNothing, CashOrNothing };

[[nodiscard]] std::string_view to_string(PayoffKind kind) noexcept;

struct PayoffSpec {
    PayoffKind kind = PayoffKind::AssetOrNothing;
    double strike = 1.5;
    double maturity = 1.0;
    double quantity = 1e6;
    double rebate = 0.0;  ///< paid below the strike, cash-or-nothing only
    double spot = 1.0;
    double volatility = 0.5;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

struct SimulationPlan {
    std::uint64_t paths = 1'000'000;
    std::uint64_t dims_per_step = 1;
    std::uint64_t steps = 1;
    std::uint64_t block_size = std::uint64_t{1} << 14;
    unsigned workers = 1;
    std::uint64_t seed = 0;
    MomentAlgorithm algorithm = MomentAlgorithm::ChanLewisKahan;
    double epsilon = 0.01;  ///< relative spot bump for the Gamma estimate

    void validate() const;

    [[nodiscard]] std::uint64_t dims_per_path() const noexcept { return dims_per_step * steps; }
    [[nodiscard]] std::uint64_t block_count() const noexcept { return (paths + block_size - 1) / block_size; }
    /// 1-based inclusive path range of a 0-based block.
    [[nodiscard]] std::pair<std::uint64_t, std::uint64_t> block_paths(std::uint64_t block) const noexcept;
};

/// Spot levels S0(1 - eps), S0, S0(1 + eps), in that order.
inline constexpr std::size_t kBumpLevels = 3;
enum BumpLevel : std::size_t { kDown = 0, kMid = 1, kUp = 2 };

/// Driftless Black-Scholes terminal price after one step of length maturity.
[[nodiscard]] double gbm_terminal(double spot, double volatility, double maturity, double z) noexcept;

/// Pays on S(T) >= strike (inclusive).
[[nodiscard]] double payoff(const PayoffSpec& spec, double terminal) noexcept;

struct GammaEstimate {
    double v_up = 0;
    double v_mid = 0;
    double v_down = 0;
    double gamma = 0;
    double epsilon = 0;
};

/// Central second difference (v_up - 2 v_mid + v_down) / (S0^2 eps^2).
/// Throws std::invalid_argument unless epsilon > 0.
[[nodiscard]] GammaEstimate gamma_fd(double v_up, double v_mid, double v_down, double spot, double epsilon);

/// Half-open range [first, last) of global stream indices read by one path.
struct ConsumedRange {
    std::uint64_t path;
    std::uint64_t first;
    std::uint64_t last;
};

template <IeeeReal Real>
struct BlockResult {
    std::uint64_t block_index = 0;
    std::array<MomentAccumulator<Real>, kBumpLevels> levels{
        MomentAccumulator<Real>(MomentAlgorithm::Naive), MomentAccumulator<Real>(MomentAlgorithm::Naive),
        MomentAccumulator<Real>(MomentAlgorithm::Naive)};
};

/// Simulates the paths of one block in ascending path order, feeding the
/// three spot levels from the same normal draws. If `audit` is non-null the
/// stream range of every path is appended to it.
template <IeeeReal Real>
[[nodiscard]] BlockResult<Real> run_block(const SimulationPlan& plan, const PayoffSpec& spec, std::uint64_t block,
                                          std::vector<ConsumedRange>* audit = nullptr);

/// All blocks, indexed by block number, computed on `plan.workers` threads.
/// A failure in any block aborts the run with std::runtime_error naming it.
template <IeeeReal Real>
[[nodiscard]] std::vector<BlockResult<Real>> run_blocks(const SimulationPlan& plan, const PayoffSpec& spec);

struct ReductionOrder {
    enum class Kind : std::uint8_t { Natural, ByCompletion };
    Kind kind = Kind::Natural;
    std::uint64_t seed = 0;

    [[nodiscard]] static ReductionOrder natural() noexcept { return {}; }
    /// A seeded pseudo-random block completion order, standing in for the
    /// order in which a scheduler would deliver finished blocks.
    [[nodiscard]] static ReductionOrder by_completion(std::uint64_t seed) noexcept {
        return {Kind::ByCompletion, seed};
    }

    /// Permutation of 0..blocks-1 (Fisher-Yates driven by Philox).
    [[nodiscard]] std::vector<std::uint64_t> permutation(std::uint64_t blocks) const;
};

/// Merges the blocks in the given order into fresh accumulators, then
/// normalizes them.
template <IeeeReal Real>
[[nodiscard]] std::array<MomentAccumulator<Real>, kBumpLevels> reduce(const std::vector<BlockResult<Real>>& blocks,
                                                                      const ReductionOrder& order);

template <IeeeReal Real>
struct ParallelRunResult {
    std::array<SummaryStats<Real>, kBumpLevels> levels;
    GammaEstimate gamma;
};

template <IeeeReal Real>
[[nodiscard]] ParallelRunResult<Real> summarize(const std::array<MomentAccumulator<Real>, kBumpLevels>& merged,
                                                const SimulationPlan& plan, const PayoffSpec& spec);

template <IeeeReal Real>
[[nodiscard]] ParallelRunResult<Real> run_parallel(const SimulationPlan& plan, const PayoffSpec& spec,
                                                   const ReductionOrder& order = ReductionOrder::natural());

/// Payoffs of every path in path order, one vector per spot level.
[[nodiscard]] std::array<std::vector<double>, kBumpLevels> collect_payoffs(const SimulationPlan& plan,
                                                                           const PayoffSpec& spec);

/// Exact sums and sums of squares of the payoffs at each spot level.
[[nodiscard]] std::array<ExactAccumulator, kBumpLevels> exact_payoff_moments(const SimulationPlan& plan,
                                                                             const PayoffSpec& spec);

}  // namespace mcstats
