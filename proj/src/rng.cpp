#include "mcstats/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mcstats {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) noexcept {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline Philox4x64Counter block_at(std::uint64_t seed, std::uint64_t block) noexcept {
    return philox4x64({block, 0, 0, 0}, {seed, 0});
}

}  // namespace

Philox4x64Counter philox4x64(Philox4x64Counter c, Philox4x64Key k) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t random_bits_at(std::uint64_t seed, std::uint64_t g) noexcept {
    return block_at(seed, (g - 1) / 4)[(g - 1) % 4];
}

double uniform_at(std::uint64_t seed, std::uint64_t g) noexcept { return bits_to_uniform(random_bits_at(seed, g)); }

float uniform32_at(std::uint64_t seed, std::uint64_t g) noexcept {
    return bits_to_uniform32(random_bits_at(seed, g));
}

std::uint64_t StreamCursor::next_bits() noexcept {
    const std::uint64_t block = (next_ - 1) / 4;
    if (block != cached_block_) {
        cache_ = block_at(seed_, block);
        cached_block_ = block;
    }
    const std::uint64_t bits = cache_[(next_ - 1) % 4];
    ++next_;
    return bits;
}

double StreamCursor::next_normal() noexcept { return detail::normal_inverse_cdf_unchecked(next_uniform()); }

double normal_inverse_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("normal_inverse_cdf: argument must lie in (0, 1), got " + std::to_string(u));
    }
    return detail::normal_inverse_cdf_unchecked(u);
}

namespace detail {

double normal_inverse_cdf_unchecked(double p) noexcept {
    // Wichura, M. J. (1988), Algorithm AS 241, PPND16.
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

}  // namespace detail
}  // namespace mcstats
