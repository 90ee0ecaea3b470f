#pragma once

/// \file
/// Exact reference arithmetic for sums, means and variances.
///
/// Every finite binary32/binary64 value is a dyadic rational, so sums and
/// sums of squares of such values are representable exactly as rationals.
/// `ExactAccumulator` gathers them in an integer superaccumulator (one
/// 128-bit bucket per binary exponent) and converts to a GMP rational once;
/// `ExactNumber` provides rational arithmetic and correctly rounded
/// conversion back to a floating-point format.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "mcstats/compensated_sum.hpp"

namespace mcstats {

class ExactNumber {
public:
    ExactNumber() = default;
    explicit ExactNumber(mpq_class value) : value_(std::move(value)) { value_.canonicalize(); }
    explicit ExactNumber(std::int64_t value) : value_(static_cast<long>(value)) {}

    /// Lossless. Throws std::invalid_argument for NaN or infinity.
    [[nodiscard]] static ExactNumber from(double x);
    [[nodiscard]] static ExactNumber from(float x) { return from(static_cast<double>(x)); }

    /// Correctly rounded (nearest, ties to even) conversion.
    template <IeeeReal Real>
    [[nodiscard]] Real round() const;

    [[nodiscard]] const mpq_class& rational() const noexcept { return value_; }
    [[nodiscard]] bool is_zero() const noexcept { return sgn(value_) == 0; }
    [[nodiscard]] int sign() const noexcept { return sgn(value_); }
    /// "p/q" (or "p" when integral).
    [[nodiscard]] std::string to_string() const { return value_.get_str(); }

    friend ExactNumber operator+(const ExactNumber& a, const ExactNumber& b) {
        return ExactNumber(mpq_class(a.value_ + b.value_));
    }
    friend ExactNumber operator-(const ExactNumber& a, const ExactNumber& b) {
        return ExactNumber(mpq_class(a.value_ - b.value_));
    }
    friend ExactNumber operator*(const ExactNumber& a, const ExactNumber& b) {
        return ExactNumber(mpq_class(a.value_ * b.value_));
    }
    /// Throws std::domain_error on division by zero.
    friend ExactNumber operator/(const ExactNumber& a, const ExactNumber& b);
    friend ExactNumber abs(const ExactNumber& a) { return ExactNumber(mpq_class(::abs(a.value_))); }

    friend bool operator==(const ExactNumber& a, const ExactNumber& b) { return a.value_ == b.value_; }
    friend bool operator<(const ExactNumber& a, const ExactNumber& b) { return a.value_ < b.value_; }

private:
    mpq_class value_{0};
};

extern template float ExactNumber::round<float>() const;
extern template double ExactNumber::round<double>() const;

/// Exact running sum of dyadic values and, optionally, of their squares.
///
/// Buckets are indexed by binary exponent; each addition is a single
/// 128-bit integer add, so 2^70 additions cannot overflow.
class ExactAccumulator {
public:
    ExactAccumulator();

    /// Throws std::invalid_argument for non-finite input.
    void add(double x);
    void add(float x) { add(static_cast<double>(x)); }
    /// Adds x and x*x (exactly) to the two sums and counts one observation.
    void add_moment(double x);
    void add_moment(float x) { add_moment(static_cast<double>(x)); }

    template <IeeeReal Real>
    void add_moments(std::span<const Real> xs) {
        for (const Real x : xs) add_moment(x);
    }

    void merge(const ExactAccumulator& other);

    [[nodiscard]] std::int64_t count() const noexcept { return count_; }
    [[nodiscard]] ExactNumber sum() const;
    [[nodiscard]] ExactNumber sum_of_squares() const;

private:
    static constexpr int kMinExponent = -1074;                           // smallest subnormal bit
    static constexpr int kSumBuckets = 971 - kMinExponent + 1;            // mantissa LSB exponents
    static constexpr int kSquareBuckets = (2 * 971 + 52) - 2 * kMinExponent + 1;

    std::vector<__int128> sum_buckets_;
    std::vector<__int128> square_buckets_;
    std::int64_t count_ = 0;
};

struct ExactMeanVariance {
    ExactNumber mean;
    ExactNumber variance;  ///< population, divisor n
};

template <IeeeReal Real>
[[nodiscard]] ExactNumber exact_sum(std::span<const Real> xs) {
    ExactAccumulator acc;
    for (const Real x : xs) acc.add(x);
    return acc.sum();
}

/// Throws std::domain_error on an empty accumulator.
[[nodiscard]] ExactMeanVariance exact_mean_variance(const ExactAccumulator& acc);

template <IeeeReal Real>
[[nodiscard]] ExactMeanVariance exact_mean_variance(std::span<const Real> xs) {
    ExactAccumulator acc;
    acc.add_moments(xs);
    return exact_mean_variance(acc);
}

struct ErrorReport {
    double absolute = 0;
    double relative = 0;  ///< equals absolute when the exact value is zero
    double ulps = 0;      ///< in units of the exact value's binade at precision P
};

template <IeeeReal Real>
[[nodiscard]] ErrorReport error_report(Real approx, const ExactNumber& exact);

extern template ErrorReport error_report<float>(float, const ExactNumber&);
extern template ErrorReport error_report<double>(double, const ExactNumber&);

}  // namespace mcstats
