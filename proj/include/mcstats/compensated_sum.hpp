#pragma once

/// \file
/// Running-sum kernels with and without error compensation.
///
/// Every kernel is a plain value type parameterized on the IEEE format it
/// accumulates in (`float` for binary32, `double` for binary64). All
/// arithmetic is performed in that format; the build disables FP contraction
/// so no fused or extended-precision intermediate can change a result.

#include <cmath>
#include <concepts>
#include <ranges>

namespace mcstats {

template <typename T>
concept IeeeReal = std::same_as<T, float> || std::same_as<T, double>;

template <IeeeReal Real>
struct SumAndError {
    Real sum;
    Real error;
};

/// Branch-free error-free transformation: `sum = fl(a + b)` and
/// `sum + error == a + b` exactly, for any ordering of |a| and |b|.
template <IeeeReal Real>
[[nodiscard]] constexpr SumAndError<Real> two_sum(Real a, Real b) noexcept {
    const Real s = a + b;
    const Real b_virtual = s - a;
    const Real a_virtual = s - b_virtual;
    const Real b_roundoff = b - b_virtual;
    const Real a_roundoff = a - a_virtual;
    return {s, a_roundoff + b_roundoff};
}

/// Same contract as `two_sum`, computed with a magnitude test instead of the
/// six-operation form.
template <IeeeReal Real>
[[nodiscard]] constexpr SumAndError<Real> fast_two_sum_ordered(Real a, Real b) noexcept {
    const Real s = a + b;
    const Real err = std::abs(a) >= std::abs(b) ? (a - s) + b : (b - s) + a;
    return {s, err};
}

template <IeeeReal Real>
struct NaiveSum {
    Real sum{0};

    constexpr void add(Real x) noexcept { sum = sum + x; }
    constexpr void merge(const NaiveSum& other) noexcept { add(other.sum); }
    [[nodiscard]] constexpr Real value() const noexcept { return sum; }

    constexpr bool operator==(const NaiveSum&) const noexcept = default;
};

/// Kahan compensated summation.
///
/// `correction` holds the negated rounding error of the last addition, so
/// `sum - correction` is the compensated estimate. `value()` returns `sum`,
/// which is what the mean/variance algorithms built on top of it consume.
template <IeeeReal Real>
struct KahanSum {
    Real sum{0};
    Real correction{0};

    constexpr void add(Real x) noexcept {
        const Real y = x - correction;
        const Real t = sum + y;
        correction = (t - sum) - y;
        sum = t;
    }

    /// Adds another partial sum. Both compensated values are combined as a
    /// double-word sum and renormalized, so afterwards `sum` is the rounded
    /// total and `-correction` the remainder.
    constexpr void merge(const KahanSum& other) noexcept {
        const auto [hi, err] = two_sum(sum, other.sum);
        const Real lo = err - (correction + other.correction);
        const auto [s, e] = two_sum(hi, lo);
        sum = s;
        correction = -e;
    }

    /// Folds the correction into `sum` without changing the represented value.
    constexpr void normalize() noexcept {
        const auto [s, e] = two_sum(sum, -correction);
        sum = s;
        correction = -e;
    }

    [[nodiscard]] constexpr Real value() const noexcept { return sum; }

    constexpr bool operator==(const KahanSum&) const noexcept = default;
};

/// Klein's second-order iterative summation. Both correction levels use the
/// magnitude-branched (Neumaier) error term; the corrections are only folded
/// into the result in `value()`.
template <IeeeReal Real>
struct KleinSum {
    Real sum{0};
    Real cs{0};
    Real ccs{0};

    constexpr void add(Real x) noexcept {
        const auto [t, c] = fast_two_sum_ordered(sum, x);
        sum = t;
        const auto [t2, cc] = fast_two_sum_ordered(cs, c);
        cs = t2;
        ccs = ccs + cc;
    }

    constexpr void merge(const KleinSum& other) noexcept {
        add(other.sum);
        if (other.cs != Real{0}) add(other.cs);
        if (other.ccs != Real{0}) add(other.ccs);
    }

    [[nodiscard]] constexpr Real value() const noexcept { return (sum + cs) + ccs; }

    constexpr bool operator==(const KleinSum&) const noexcept = default;
};

/// Accumulates the exact two-sum error of every step separately and adds it
/// back once at the end. This is an interpretation of the "Knuth correction"
/// row: with sorted input the error accumulator itself becomes a long naive
/// sum, which is what makes it degrade.
template <IeeeReal Real>
struct KnuthSum {
    Real sum{0};
    Real error{0};

    constexpr void add(Real x) noexcept {
        const auto [s, e] = two_sum(sum, x);
        sum = s;
        error = error + e;
    }

    constexpr void merge(const KnuthSum& other) noexcept {
        add(other.sum);
        error = error + other.error;
    }

    [[nodiscard]] constexpr Real value() const noexcept { return sum + error; }

    constexpr bool operator==(const KnuthSum&) const noexcept = default;
};

template <typename Kernel, std::ranges::input_range Range>
[[nodiscard]] constexpr auto accumulate(const Range& xs) {
    Kernel kernel{};
    for (const auto x : xs) kernel.add(x);
    return kernel.value();
}

}  // namespace mcstats
