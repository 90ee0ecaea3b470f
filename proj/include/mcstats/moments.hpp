#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mcstats/compensated_sum.hpp"

namespace mcstats {

/// Single-pass mean/variance algorithm variants.
enum class MomentAlgorithm : std::uint8_t {
    Naive,              ///< S += x, T += x^2, V = T/n - M^2
    NaiveKahan,         ///< Naive with Kahan-compensated S and T
    ShiftedNaiveKahan,  ///< Naive on x - K (K = first observation), Kahan-compensated
    Ling,               ///< M += (x - M)/k, T += (k-1)(x - M)^2/k
    LingKahan,          ///< Ling with Kahan-compensated M and T
    ChanLewisKahan,     ///< Kahan-compensated S with M = S/k, Ling-style T
    NaiveKlein,         ///< Naive with Klein second-order compensated S and T
};

inline constexpr std::array<MomentAlgorithm, 7> kAllMomentAlgorithms = {
    MomentAlgorithm::Naive,          MomentAlgorithm::NaiveKahan, MomentAlgorithm::ShiftedNaiveKahan,
    MomentAlgorithm::Ling,           MomentAlgorithm::LingKahan,  MomentAlgorithm::ChanLewisKahan,
    MomentAlgorithm::NaiveKlein,
};

/// The three algorithms whose means are expected to be order independent.
inline constexpr std::array<MomentAlgorithm, 3> kReproducibleMeanAlgorithms = {
    MomentAlgorithm::NaiveKahan, MomentAlgorithm::LingKahan, MomentAlgorithm::ChanLewisKahan};

/// Kebab-case tag used on the command line and in reports.
[[nodiscard]] std::string_view to_string(MomentAlgorithm algorithm) noexcept;
/// Throws std::invalid_argument on an unknown tag.
[[nodiscard]] MomentAlgorithm parse_moment_algorithm(std::string_view tag);

[[nodiscard]] constexpr bool is_mean_based(MomentAlgorithm a) noexcept {
    return a == MomentAlgorithm::Ling || a == MomentAlgorithm::LingKahan;
}

enum class VarianceKind : std::uint8_t { Population, Sample };

template <IeeeReal Real>
struct SummaryStats {
    std::int64_t n = 0;
    Real mean{0};
    Real variance{0};
    Real sum{0};  ///< n*M in precision P for the Ling variants
};

/// Algorithm-tagged single-pass accumulator.
///
/// Each update is a literal transcription of its algorithm, in the order the
/// operations are written; in floating point that order is part of the
/// result. The state is a plain value: copy it, move it between threads,
/// merge partial results on one reducer.
template <IeeeReal Real>
class MomentAccumulator {
public:
    explicit MomentAccumulator(MomentAlgorithm algorithm) noexcept : algorithm_(algorithm) {}

    [[nodiscard]] MomentAlgorithm algorithm() const noexcept { return algorithm_; }
    [[nodiscard]] std::int64_t count() const noexcept { return count_; }
    [[nodiscard]] bool empty() const noexcept { return count_ == 0; }

    void update(Real x) noexcept;

    /// Equivalent to calling update() on each element in order.
    void update(std::span<const Real> xs) noexcept;

    /// Combines a partial result computed on a disjoint block of samples.
    /// Throws std::invalid_argument if the algorithms differ.
    MomentAccumulator& merge(const MomentAccumulator& other);

    /// Folds the Kahan corrections into the running sums. The represented
    /// values are unchanged, but the result no longer depends on how the
    /// samples were split into blocks. Reducers call this once at the end.
    void normalize() noexcept;

    /// Throws std::domain_error when no sample has been seen (or only one
    /// for the sample variance).
    [[nodiscard]] SummaryStats<Real> finalize(VarianceKind kind = VarianceKind::Population) const;

    // Raw state, for inspection and tests.
    [[nodiscard]] const KahanSum<Real>& sum_state() const noexcept { return sum_; }
    [[nodiscard]] const KahanSum<Real>& squares_state() const noexcept { return squares_; }
    [[nodiscard]] const KleinSum<Real>& klein_sum_state() const noexcept { return klein_sum_; }
    [[nodiscard]] const KleinSum<Real>& klein_squares_state() const noexcept { return klein_squares_; }
    [[nodiscard]] Real running_mean() const noexcept { return mean_; }
    [[nodiscard]] Real shift() const noexcept { return shift_; }

    bool operator==(const MomentAccumulator&) const noexcept = default;

private:
    template <MomentAlgorithm A>
    void step(Real x) noexcept;

    MomentAlgorithm algorithm_;
    std::int64_t count_ = 0;
    // S/S* (sum-based variants) or M/M* (LingKahan). Only .sum is used by
    // the uncorrected variants.
    KahanSum<Real> sum_{};
    KahanSum<Real> squares_{};  // T/T*
    KleinSum<Real> klein_sum_{};
    KleinSum<Real> klein_squares_{};
    Real mean_{0};   // M for Ling and ChanLewisKahan
    Real shift_{0};  // K for ShiftedNaiveKahan
};

template <IeeeReal Real>
template <MomentAlgorithm A>
void MomentAccumulator<Real>::step(Real x) noexcept {
    ++count_;
    const Real k = static_cast<Real>(count_);
    const Real k_minus_1 = static_cast<Real>(count_ - 1);

    if constexpr (A == MomentAlgorithm::Naive) {
        sum_.sum = sum_.sum + x;
        squares_.sum = squares_.sum + x * x;
    } else if constexpr (A == MomentAlgorithm::NaiveKahan) {
        sum_.add(x);
        squares_.add(x * x);
    } else if constexpr (A == MomentAlgorithm::ShiftedNaiveKahan) {
        if (count_ == 1) shift_ = x;
        const Real d = x - shift_;
        sum_.add(d);
        squares_.add(d * d);
    } else if constexpr (A == MomentAlgorithm::Ling) {
        const Real d = x - mean_;
        squares_.sum = squares_.sum + k_minus_1 * (d * d) / k;
        mean_ = mean_ + d / k;
    } else if constexpr (A == MomentAlgorithm::LingKahan) {
        const Real d = x - sum_.sum;
        squares_.add(k_minus_1 * (d * d) / k);
        sum_.add(d / k);
    } else if constexpr (A == MomentAlgorithm::ChanLewisKahan) {
        const Real d = x - mean_;
        squares_.add(k_minus_1 * (d * d) / k);
        sum_.add(x);
        mean_ = sum_.sum / k;
    } else if constexpr (A == MomentAlgorithm::NaiveKlein) {
        klein_sum_.add(x);
        klein_squares_.add(x * x);
    }
}

template <IeeeReal Real>
void MomentAccumulator<Real>::update(Real x) noexcept {
    update(std::span<const Real>(&x, 1));
}

template <IeeeReal Real>
void MomentAccumulator<Real>::update(std::span<const Real> xs) noexcept {
    auto run = [&]<MomentAlgorithm A>() {
        for (const Real x : xs) step<A>(x);
    };
    switch (algorithm_) {
        case MomentAlgorithm::Naive: run.template operator()<MomentAlgorithm::Naive>(); break;
        case MomentAlgorithm::NaiveKahan: run.template operator()<MomentAlgorithm::NaiveKahan>(); break;
        case MomentAlgorithm::ShiftedNaiveKahan:
            run.template operator()<MomentAlgorithm::ShiftedNaiveKahan>();
            break;
        case MomentAlgorithm::Ling: run.template operator()<MomentAlgorithm::Ling>(); break;
        case MomentAlgorithm::LingKahan: run.template operator()<MomentAlgorithm::LingKahan>(); break;
        case MomentAlgorithm::ChanLewisKahan: run.template operator()<MomentAlgorithm::ChanLewisKahan>(); break;
        case MomentAlgorithm::NaiveKlein: run.template operator()<MomentAlgorithm::NaiveKlein>(); break;
    }
}

namespace detail {

// hi + lo ~= (delta_hi + delta_lo) * num / den, carried to about twice the
// working precision.
template <IeeeReal Real>
SumAndError<Real> scaled_increment(Real delta_hi, Real delta_lo, Real num, Real den) noexcept {
    const Real p = delta_hi * num;
    const Real p_err = std::fma(delta_hi, num, -p);
    const Real q = p / den;
    const Real remainder = std::fma(-q, den, p);
    const Real q_lo = (remainder + (p_err + delta_lo * num)) / den;
    return {q, q_lo};
}

}  // namespace detail

template <IeeeReal Real>
MomentAccumulator<Real>& MomentAccumulator<Real>::merge(const MomentAccumulator& other) {
    if (other.algorithm_ != algorithm_) {
        throw std::invalid_argument("cannot merge accumulators of different algorithms: " +
                                    std::string(to_string(algorithm_)) + " vs " +
                                    std::string(to_string(other.algorithm_)));
    }
    if (other.count_ == 0) return *this;
    if (count_ == 0) {
        *this = other;
        return *this;
    }

    const std::int64_t total = count_ + other.count_;
    const Real na = static_cast<Real>(count_);
    const Real nb = static_cast<Real>(other.count_);
    const Real n = static_cast<Real>(total);

    switch (algorithm_) {
        case MomentAlgorithm::Naive:
            sum_.sum = sum_.sum + other.sum_.sum;
            squares_.sum = squares_.sum + other.squares_.sum;
            break;
        case MomentAlgorithm::NaiveKahan:
            sum_.merge(other.sum_);
            squares_.merge(other.squares_);
            break;
        case MomentAlgorithm::ShiftedNaiveKahan: {
            // Re-express the other block relative to this block's shift.
            const Real delta = other.shift_ - shift_;
            const Real other_sum = other.sum_.sum - other.sum_.correction;
            sum_.merge(other.sum_);
            squares_.merge(other.squares_);
            if (delta != Real{0}) {
                sum_.add(nb * delta);
                squares_.add(Real{2} * delta * other_sum);
                squares_.add(nb * delta * delta);
            }
            break;
        }
        case MomentAlgorithm::Ling: {
            const Real delta = other.mean_ - mean_;
            mean_ = mean_ + delta * nb / n;
            squares_.sum = squares_.sum + other.squares_.sum + delta * delta * (na * nb / n);
            break;
        }
        case MomentAlgorithm::LingKahan: {
            // Compensated means are M - M*; take the difference without loss.
            const auto [d_hi, d_err] = two_sum(other.sum_.sum, -sum_.sum);
            const Real d_lo = d_err + (sum_.correction - other.sum_.correction);
            const auto [inc_hi, inc_lo] = detail::scaled_increment(d_hi, d_lo, nb, n);
            squares_.merge(other.squares_);
            squares_.add(d_hi * d_hi * (na * nb / n));
            sum_.add(inc_hi);
            if (inc_lo != Real{0}) sum_.add(inc_lo);
            break;
        }
        case MomentAlgorithm::ChanLewisKahan: {
            const Real delta = other.mean_ - mean_;
            squares_.merge(other.squares_);
            squares_.add(delta * delta * (na * nb / n));
            sum_.merge(other.sum_);
            mean_ = sum_.sum / n;
            break;
        }
        case MomentAlgorithm::NaiveKlein:
            klein_sum_.merge(other.klein_sum_);
            klein_squares_.merge(other.klein_squares_);
            break;
    }
    count_ = total;
    return *this;
}

template <IeeeReal Real>
void MomentAccumulator<Real>::normalize() noexcept {
    if (count_ == 0) return;
    switch (algorithm_) {
        case MomentAlgorithm::NaiveKahan:
        case MomentAlgorithm::ShiftedNaiveKahan:
        case MomentAlgorithm::LingKahan:
            sum_.normalize();
            squares_.normalize();
            break;
        case MomentAlgorithm::ChanLewisKahan:
            sum_.normalize();
            squares_.normalize();
            mean_ = sum_.sum / static_cast<Real>(count_);
            break;
        case MomentAlgorithm::Naive:
        case MomentAlgorithm::Ling:
        case MomentAlgorithm::NaiveKlein:
            break;
    }
}

template <IeeeReal Real>
SummaryStats<Real> MomentAccumulator<Real>::finalize(VarianceKind kind) const {
    if (count_ == 0) {
        throw std::domain_error("finalize on an empty accumulator: mean is undefined");
    }
    if (kind == VarianceKind::Sample && count_ < 2) {
        throw std::domain_error("sample variance needs at least two observations");
    }
    const Real n = static_cast<Real>(count_);
    SummaryStats<Real> out;
    out.n = count_;

    switch (algorithm_) {
        case MomentAlgorithm::Naive:
        case MomentAlgorithm::NaiveKahan:
            out.sum = sum_.sum;
            out.mean = sum_.sum / n;
            out.variance = squares_.sum / n - out.mean * out.mean;
            break;
        case MomentAlgorithm::ShiftedNaiveKahan:
            out.mean = sum_.sum / n + shift_;
            out.variance = squares_.sum / n - (out.mean - shift_) * (out.mean - shift_);
            out.sum = out.mean * n;
            break;
        case MomentAlgorithm::Ling:
            out.mean = mean_;
            out.variance = squares_.sum / n;
            out.sum = mean_ * n;
            break;
        case MomentAlgorithm::LingKahan:
            out.mean = sum_.sum;
            out.variance = squares_.sum / n;
            out.sum = sum_.sum * n;
            break;
        case MomentAlgorithm::ChanLewisKahan:
            out.sum = sum_.sum;
            out.mean = sum_.sum / n;
            out.variance = squares_.sum / n;
            break;
        case MomentAlgorithm::NaiveKlein: {
            const Real s = klein_sum_.value();
            out.sum = s;
            out.mean = s / n;
            out.variance = klein_squares_.value() / n - out.mean * out.mean;
            break;
        }
    }
    if (kind == VarianceKind::Sample) {
        out.variance = out.variance * (n / static_cast<Real>(count_ - 1));
    }
    return out;
}

extern template class MomentAccumulator<float>;
extern template class MomentAccumulator<double>;

}  // namespace mcstats
