#include "mcstats/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <mpfr.h>

namespace mcstats {
namespace {

struct Dyadic {
    std::int64_t mantissa;  // |mantissa| < 2^53
    int exponent;           // value = mantissa * 2^exponent, exponent >= -1074
};

Dyadic decompose(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    const int biased = static_cast<int>((bits >> 52) & 0x7ff);
    if (biased == 0x7ff) {
        throw std::invalid_argument("exact arithmetic requires finite input");
    }
    std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);
    int exponent = -1074;
    if (biased != 0) {
        frac |= std::uint64_t{1} << 52;
        exponent = biased - 1075;
    }
    auto m = static_cast<std::int64_t>(frac);
    if (bits >> 63) m = -m;
    return {m, exponent};
}

mpz_class to_mpz(__int128 v) {
    const bool negative = v < 0;
    auto u = negative ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
    const std::uint64_t words[2] = {static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(u >> 64)};
    mpz_class out;
    mpz_import(out.get_mpz_t(), 2, -1, sizeof(std::uint64_t), 0, 0, words);
    if (negative) out = -out;
    return out;
}

// sum_i buckets[i] * 2^(i + base_exponent)
ExactNumber collapse(const std::vector<__int128>& buckets, int base_exponent) {
    std::size_t first = 0;
    while (first < buckets.size() && buckets[first] == 0) ++first;
    if (first == buckets.size()) return ExactNumber{};

    mpz_class total = 0;
    mpz_class term;
    for (std::size_t i = buckets.size(); i-- > first;) {
        if (buckets[i] == 0) continue;
        term = to_mpz(buckets[i]);
        mpz_mul_2exp(term.get_mpz_t(), term.get_mpz_t(), i - first);
        total += term;
    }
    const long exponent = static_cast<long>(first) + base_exponent;
    mpq_class q(total);
    if (exponent >= 0) {
        mpz_mul_2exp(q.get_num_mpz_t(), q.get_num_mpz_t(), static_cast<mp_bitcnt_t>(exponent));
    } else {
        mpz_mul_2exp(q.get_den_mpz_t(), q.get_den_mpz_t(), static_cast<mp_bitcnt_t>(-exponent));
    }
    return ExactNumber(std::move(q));
}

// Binary exponent e with 2^e <= |q| < 2^(e+1); q must be nonzero.
long floor_log2(const mpq_class& q) {
    mpfr_t t;
    mpfr_init2(t, 64);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDZ);
    const long e = mpfr_get_exp(t) - 1;
    mpfr_clear(t);
    return e;
}

}  // namespace

ExactNumber ExactNumber::from(double x) {
    const auto [m, e] = decompose(x);
    mpq_class q(static_cast<long>(m));
    if (e >= 0) {
        mpz_mul_2exp(q.get_num_mpz_t(), q.get_num_mpz_t(), static_cast<mp_bitcnt_t>(e));
    } else {
        mpz_mul_2exp(q.get_den_mpz_t(), q.get_den_mpz_t(), static_cast<mp_bitcnt_t>(-e));
    }
    return ExactNumber(std::move(q));
}

template <IeeeReal Real>
Real ExactNumber::round() const {
    constexpr long min_ulp_exponent = std::numeric_limits<Real>::min_exponent - std::numeric_limits<Real>::digits;
    if (!is_zero() && floor_log2(value_) < std::numeric_limits<Real>::min_exponent - 1) {
        // Subnormal range: round value / 2^min_ulp_exponent to an integer,
        // ties to even, so the result is rounded only once.
        mpq_class scaled = ::abs(value_);
        mpz_mul_2exp(scaled.get_num_mpz_t(), scaled.get_num_mpz_t(), static_cast<mp_bitcnt_t>(-min_ulp_exponent));
        scaled.canonicalize();
        mpz_class q;
        mpz_class r;
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
        const int cmp = mpz_cmp(mpz_class(2 * r).get_mpz_t(), scaled.get_den_mpz_t());
        if (cmp > 0 || (cmp == 0 && mpz_odd_p(q.get_mpz_t()))) ++q;
        const Real magnitude = std::ldexp(static_cast<Real>(q.get_ui()), static_cast<int>(min_ulp_exponent));
        return sign() < 0 ? -magnitude : magnitude;
    }
    mpfr_t t;
    mpfr_init2(t, std::numeric_limits<Real>::digits);
    mpfr_set_q(t, value_.get_mpq_t(), MPFR_RNDN);
    Real out;
    if constexpr (std::is_same_v<Real, float>) {
        out = mpfr_get_flt(t, MPFR_RNDN);
    } else {
        out = mpfr_get_d(t, MPFR_RNDN);
    }
    mpfr_clear(t);
    return out;
}

template float ExactNumber::round<float>() const;
template double ExactNumber::round<double>() const;

ExactNumber operator/(const ExactNumber& a, const ExactNumber& b) {
    if (b.is_zero()) throw std::domain_error("exact division by zero");
    return ExactNumber(mpq_class(a.value_ / b.value_));
}

ExactAccumulator::ExactAccumulator() : sum_buckets_(kSumBuckets, 0), square_buckets_(kSquareBuckets, 0) {}

void ExactAccumulator::add(double x) {
    const auto [m, e] = decompose(x);
    sum_buckets_[e - kMinExponent] += m;
}

void ExactAccumulator::add_moment(double x) {
    const auto [m, e] = decompose(x);
    sum_buckets_[e - kMinExponent] += m;

    // m^2 needs 106 bits; split m = hi*2^26 + lo so each partial product
    // stays below 2^54.
    const std::int64_t a = m < 0 ? -m : m;
    const std::int64_t hi = a >> 26;
    const std::int64_t lo = a & ((std::int64_t{1} << 26) - 1);
    const int base = 2 * e - 2 * kMinExponent;
    square_buckets_[base] += lo * lo;
    square_buckets_[base + 26] += 2 * hi * lo;
    square_buckets_[base + 52] += hi * hi;
    ++count_;
}

void ExactAccumulator::merge(const ExactAccumulator& other) {
    for (std::size_t i = 0; i < sum_buckets_.size(); ++i) sum_buckets_[i] += other.sum_buckets_[i];
    for (std::size_t i = 0; i < square_buckets_.size(); ++i) square_buckets_[i] += other.square_buckets_[i];
    count_ += other.count_;
}

ExactNumber ExactAccumulator::sum() const { return collapse(sum_buckets_, kMinExponent); }

ExactNumber ExactAccumulator::sum_of_squares() const { return collapse(square_buckets_, 2 * kMinExponent); }

ExactMeanVariance exact_mean_variance(const ExactAccumulator& acc) {
    if (acc.count() == 0) throw std::domain_error("mean of an empty sample is undefined");
    const ExactNumber n(acc.count());
    ExactNumber mean = acc.sum() / n;
    ExactNumber variance = acc.sum_of_squares() / n - mean * mean;
    return {std::move(mean), std::move(variance)};
}

template <IeeeReal Real>
ErrorReport error_report(Real approx, const ExactNumber& exact) {
    const ExactNumber diff = abs(ExactNumber::from(approx) - exact);
    ErrorReport report;
    report.absolute = diff.round<double>();
    if (exact.is_zero()) {
        report.relative = report.absolute;
        report.ulps = diff.is_zero() ? 0.0 : std::numeric_limits<double>::infinity();
        return report;
    }
    report.relative = (diff / abs(exact)).round<double>();

    constexpr long digits = std::numeric_limits<Real>::digits;
    constexpr long min_ulp_exponent = std::numeric_limits<Real>::min_exponent - digits;
    const long ulp_exponent = std::max(floor_log2(exact.rational()) - (digits - 1), min_ulp_exponent);
    mpq_class scaled = diff.rational();
    if (ulp_exponent >= 0) {
        mpz_mul_2exp(scaled.get_den_mpz_t(), scaled.get_den_mpz_t(), static_cast<mp_bitcnt_t>(ulp_exponent));
    } else {
        mpz_mul_2exp(scaled.get_num_mpz_t(), scaled.get_num_mpz_t(), static_cast<mp_bitcnt_t>(-ulp_exponent));
    }
    report.ulps = ExactNumber(std::move(scaled)).round<double>();
    return report;
}

template ErrorReport error_report<float>(float, const ExactNumber&);
template ErrorReport error_report<double>(double, const ExactNumber&);

}  // namespace mcstats
