#include <doctest.h>

#include <random>
#include <vector>

#include "mcstats/exact.hpp"
#include "mcstats/moments.hpp"

using namespace mcstats;

namespace {

template <typename Real>
SummaryStats<Real> run(MomentAlgorithm a, const std::vector<Real>& xs, VarianceKind kind = VarianceKind::Population) {
    MomentAccumulator<Real> acc(a);
    acc.update(std::span<const Real>(xs));
    return acc.finalize(kind);
}

std::vector<double> normal_corpus(std::uint64_t seed, std::size_t n, double mu, double sigma) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(mu, sigma);
    std::vector<double> xs(n);
    for (auto& x : xs) x = dist(gen);
    return xs;
}

}  // namespace

TEST_CASE("tags round-trip") {
    for (const auto a : kAllMomentAlgorithms) CHECK(parse_moment_algorithm(to_string(a)) == a);
    CHECK(to_string(MomentAlgorithm::ChanLewisKahan) == "chan-lewis-kahan");
    CHECK_THROWS_AS((void)parse_moment_algorithm("welford"), std::invalid_argument);
}

TEST_CASE("[1, 2, 3, 4] gives mean 2.5 and variance 1.25 for every algorithm") {
    const std::vector<double> xs{1, 2, 3, 4};
    for (const auto a : kAllMomentAlgorithms) {
        CAPTURE(to_string(a));
        const auto s = run(a, xs);
        CHECK(s.n == 4);
        CHECK(s.mean == 2.5);
        CHECK(s.variance == 1.25);
        CHECK(s.sum == 10.0);
        CHECK(run(a, xs, VarianceKind::Sample).variance == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
        const std::vector<float> fs{1, 2, 3, 4};
        CHECK(run(a, fs).mean == 2.5f);
        CHECK(run(a, fs).variance == 1.25f);
    }
}

TEST_CASE("a single observation has zero population variance") {
    for (const auto a : kAllMomentAlgorithms) {
        const auto s = run(a, std::vector<double>{3.0});
        CHECK(s.mean == 3.0);
        CHECK(s.variance == 0.0);
    }
}

TEST_CASE("deviation-based algorithms give exactly zero variance on constant data") {
    const std::vector<double> xs(1000, 0.1);
    for (const auto a : {MomentAlgorithm::ShiftedNaiveKahan, MomentAlgorithm::Ling, MomentAlgorithm::LingKahan}) {
        CAPTURE(to_string(a));
        CHECK(run(a, xs).variance == 0.0);
    }
}

TEST_CASE("finalize rejects undefined statistics") {
    MomentAccumulator<double> acc(MomentAlgorithm::Naive);
    CHECK_THROWS_AS((void)acc.finalize(), std::domain_error);
    acc.update(1.0);
    CHECK_NOTHROW((void)acc.finalize());
    CHECK_THROWS_AS((void)acc.finalize(VarianceKind::Sample), std::domain_error);
}

TEST_CASE("merging different algorithms is rejected") {
    MomentAccumulator<double> a(MomentAlgorithm::Naive);
    const MomentAccumulator<double> b(MomentAlgorithm::Ling);
    CHECK_THROWS_AS(a.merge(b), std::invalid_argument);
}

TEST_CASE("span update equals element-wise update") {
    const auto xs = normal_corpus(11, 500, 1e5, 1.0);
    for (const auto a : kAllMomentAlgorithms) {
        MomentAccumulator<double> bulk(a);
        MomentAccumulator<double> single(a);
        bulk.update(std::span<const double>(xs));
        for (const double x : xs) single.update(x);
        CHECK(bulk == single);
    }
}

TEST_CASE("merge with an empty accumulator is the identity") {
    const auto xs = normal_corpus(5, 100, 10.0, 2.0);
    for (const auto a : kAllMomentAlgorithms) {
        MomentAccumulator<double> acc(a);
        acc.update(std::span<const double>(xs));
        MomentAccumulator<double> left(a);
        left.merge(acc);
        MomentAccumulator<double> right = acc;
        right.merge(MomentAccumulator<double>(a));
        CHECK(left == acc);
        CHECK(right == acc);
    }
}

TEST_CASE("split-and-merge stays close to the exact moments") {
    const auto xs = normal_corpus(9, 4000, 1e3, 3.0);
    const auto exact = exact_mean_variance(std::span<const double>(xs));
    for (const auto a : kAllMomentAlgorithms) {
        CAPTURE(to_string(a));
        MomentAccumulator<double> whole(a);
        for (std::size_t start = 0; start < xs.size(); start += 333) {
            MomentAccumulator<double> part(a);
            part.update(std::span<const double>(xs).subspan(start, std::min<std::size_t>(333, xs.size() - start)));
            whole.merge(part);
        }
        const auto s = whole.finalize();
        CHECK(s.n == 4000);
        CHECK(error_report<double>(s.mean, exact.mean).relative < 1e-13);
        CHECK(error_report<double>(s.variance, exact.variance).relative < 1e-6);
    }
}

TEST_CASE("shifted merge re-expresses blocks with different shifts") {
    const std::vector<double> a{100.0, 101.0, 102.0};
    const std::vector<double> b{200.0, 203.0};
    MomentAccumulator<double> left(MomentAlgorithm::ShiftedNaiveKahan);
    MomentAccumulator<double> right(MomentAlgorithm::ShiftedNaiveKahan);
    left.update(std::span<const double>(a));
    right.update(std::span<const double>(b));
    left.merge(right);
    const auto s = left.finalize();
    CHECK(s.mean == doctest::Approx(141.2).epsilon(1e-15));
    // Population variance of {100, 101, 102, 200, 203}.
    CHECK(s.variance == doctest::Approx(2425.36).epsilon(1e-14));
}

TEST_CASE("compensated means are correctly rounded on a large-mean corpus") {
    const auto xs = normal_corpus(21, 100000, 1e5, 1.0);
    const auto exact = exact_mean_variance(std::span<const double>(xs));
    const double naive_var = error_report<double>(run(MomentAlgorithm::Naive, xs).variance, exact.variance).relative;
    for (const auto a : kReproducibleMeanAlgorithms) {
        CAPTURE(to_string(a));
        CHECK(error_report<double>(run(a, xs).mean, exact.mean).ulps <= 1.0);
    }
    const double clk_var =
        error_report<double>(run(MomentAlgorithm::ChanLewisKahan, xs).variance, exact.variance).relative;
    CHECK(clk_var < 1e-11);
    CHECK(naive_var > 1e4 * clk_var);
}
