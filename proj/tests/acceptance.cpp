// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mcstats/compensated_sum.hpp"
#include "mcstats/exact.hpp"
#include "mcstats/experiments.hpp"
#include "mcstats/mc_engine.hpp"
#include "mcstats/moments.hpp"
#include "mcstats/rng.hpp"

using namespace mcstats;

namespace {

constexpr double kEps32 = 0x1p-23;
constexpr double kAssetAnalyticValue = 287422.55518746964;  // q * Phi(d1), driftless

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

bool is_compensated(std::string_view tag) {
    return tag == "naive-kahan" || tag == "ling-kahan" || tag == "chan-lewis-kahan";
}

const ReportRow& find_row(const std::vector<ReportRow>& rows, const std::string& run, std::string_view algorithm,
                          std::string_view ordering, Statistic statistic) {
    for (const auto& r : rows) {
        if (r.run == run && r.algorithm == algorithm && r.ordering == ordering && r.statistic == statistic) return r;
    }
    throw std::logic_error("missing row " + run + " " + std::string(algorithm) + " " + std::string(ordering));
}

std::uint64_t mean_gamma_key(const ParallelRunResult<double>& r, std::set<std::pair<double, double>>& seen) {
    seen.insert({r.levels[kMid].mean, r.gamma.gamma});
    return seen.size();
}

Outcome normal_experiment() {
    const ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Normal);
    const auto rows = run_experiment(config).rows;
    Outcome out;

    double naive_m = 0;
    double naive_v = 0;
    bool anchors = true;
    for (const auto& ordering : {"raw", "sorted"}) {
        naive_m = find_row(rows, "mean", "naive", ordering, Statistic::Mean).rel_err;
        naive_v = find_row(rows, "mean", "naive", ordering, Statistic::Variance).rel_err;
        anchors = anchors && naive_m >= 1e-16 && naive_m <= 1e-13 && naive_v >= 1e-6 && naive_v <= 1e-2;
    }
    out.require(anchors, "naive mean rel " + fmt("%.2e", naive_m) + ", variance rel " + fmt("%.2e", naive_v));

    double worst_ulps = 0;
    double worst_clk = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.run == "mean") continue;
        if (r.statistic == Statistic::Mean && is_compensated(r.algorithm)) worst_ulps = std::max(worst_ulps, r.ulps);
        if (r.statistic == Statistic::Variance && r.algorithm == "chan-lewis-kahan") {
            worst_clk = std::max(worst_clk, r.rel_err);
            const double naive = find_row(rows, r.run, "naive", r.ordering, Statistic::Variance).rel_err;
            min_gap = std::min(min_gap, naive / r.rel_err);
        }
    }
    out.require(worst_ulps <= 1.0, "compensated mean max " + fmt("%.3g", worst_ulps) + " ulp");
    out.require(worst_clk <= 1e-11, "chan-lewis-kahan variance max rel " + fmt("%.2e", worst_clk));
    out.require(min_gap >= 1e4, "min naive/chan-lewis-kahan variance ratio " + fmt("%.3g", min_gap));
    return out;
}

Outcome permutation_reproducibility() {
    const ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Normal);
    std::vector<double> samples(config.n);
    StreamCursor cursor(config.seed);
    for (auto& x : samples) x = config.mu + config.sigma * cursor.next_normal();
    const std::span<const double> raw(samples);
    const ExactNumber reference = exact_sum(raw);

    std::vector<std::vector<double>> orders;
    orders.push_back(sort_ascending(raw));
    for (std::uint64_t p = 1; p <= 20; ++p) orders.push_back(permute(raw, p));

    Outcome out;
    bool multiset = true;
    for (const auto& o : orders) multiset = multiset && exact_sum(std::span<const double>(o)) == reference;
    out.require(multiset, "orderings preserve the multiset");

    for (const auto algorithm : {MomentAlgorithm::Naive, MomentAlgorithm::NaiveKahan, MomentAlgorithm::LingKahan,
                                 MomentAlgorithm::ChanLewisKahan}) {
        std::set<double> means;
        for (const auto& o : orders) {
            MomentAccumulator<double> acc(algorithm);
            acc.update(std::span<const double>(o));
            means.insert(acc.finalize().mean);
        }
        const bool ok = algorithm == MomentAlgorithm::Naive ? means.size() >= 2 : means.size() == 1;
        out.require(ok, std::string(to_string(algorithm)) + " " + std::to_string(means.size()) + " distinct");
    }
    return out;
}

Outcome uniform32_experiment() {
    ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::Uniform32);
    config.algorithms = {MomentAlgorithm::Naive, MomentAlgorithm::NaiveKahan, MomentAlgorithm::NaiveKlein};
    config.knuth_row = true;
    const auto rows = run_experiment(config).rows;
    const double n = static_cast<double>(config.n);
    Outcome out;

    double min_naive_rel = std::numeric_limits<double>::infinity();
    double max_kahan_abs = 0;
    double max_kahan_mean = 0;
    bool kahan_identical = true;
    int klein_degrades = 0;
    double knuth_raw = 0;
    double knuth_sorted = 0;
    double min_knuth_ratio = std::numeric_limits<double>::infinity();
    for (std::uint64_t run = 0; run < config.runs; ++run) {
        const std::string r = std::to_string(run);
        for (const auto& ordering : {"raw", "sorted"}) {
            min_naive_rel = std::min(min_naive_rel, find_row(rows, r, "naive", ordering, Statistic::Sum).rel_err);
            max_kahan_abs = std::max(max_kahan_abs, find_row(rows, r, "naive-kahan", ordering, Statistic::Sum).abs_err);
            max_kahan_mean =
                std::max(max_kahan_mean, find_row(rows, r, "naive-kahan", ordering, Statistic::Mean).abs_err);
        }
        for (const auto s : {Statistic::Sum, Statistic::Mean, Statistic::Variance}) {
            kahan_identical = kahan_identical && find_row(rows, r, "naive-kahan", "raw", s).bits_hex ==
                                                    find_row(rows, r, "naive-kahan", "sorted", s).bits_hex;
        }
        const double klein_raw = find_row(rows, r, "naive-klein", "raw", Statistic::Sum).abs_err;
        const double klein_sorted = find_row(rows, r, "naive-klein", "sorted", Statistic::Sum).abs_err;
        if (klein_sorted >= 10 * klein_raw) ++klein_degrades;
        const double kr = find_row(rows, r, "naive-knuth", "raw", Statistic::Sum).abs_err;
        const double ks = find_row(rows, r, "naive-knuth", "sorted", Statistic::Sum).abs_err;
        knuth_raw += kr;
        knuth_sorted += ks;
        min_knuth_ratio = std::min(min_knuth_ratio, ks / kr);
    }
    const double knuth_ratio = knuth_sorted / knuth_raw;

    out.require(min_naive_rel >= 0.1, "naive sum min rel " + fmt("%.3f", min_naive_rel));
    out.require(max_kahan_abs <= 4 * n * kEps32,
                "kahan sum max abs " + fmt("%.3g", max_kahan_abs) + " <= " + fmt("%.3g", 4 * n * kEps32));
    out.require(kahan_identical, "kahan raw/sorted bit-identical");
    out.require(klein_degrades >= 8, "klein sorted >= 10x raw on " + std::to_string(klein_degrades) + "/10");
    out.require(knuth_ratio >= 1e3, "knuth sorted/raw mean error ratio " + fmt("%.3g", knuth_ratio) +
                                        " (per-seed min " + fmt("%.3g", min_knuth_ratio) + ")");
    out.require(max_kahan_mean <= kEps32, "kahan mean max abs " + fmt("%.3g", max_kahan_mean));
    return out;
}

Outcome asset_or_nothing() {
    const ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::AssetOrNothing);
    const PayoffSpec spec = config.payoff_spec();
    std::vector<ReductionOrder> orders{ReductionOrder::natural()};
    for (std::uint64_t s = 1; s < 20; ++s) orders.push_back(ReductionOrder::by_completion(s));

    Outcome out;
    std::size_t max_distinct = 0;
    double min_spread = std::numeric_limits<double>::infinity();
    double worst_z = 0;
    for (std::uint64_t run = 0; run < config.runs; ++run) {
        for (const auto algorithm : kReproducibleMeanAlgorithms) {
            const SimulationPlan base = config.plan_for_run(run, algorithm);
            std::set<std::pair<double, double>> seen;
            for (const unsigned workers : {1u, 4u, 8u}) {
                SimulationPlan plan = base;
                plan.workers = workers;
                const auto blocks = run_blocks<double>(plan, spec);
                for (const auto& order : orders) {
                    const auto result = summarize<double>(reduce<double>(blocks, order), plan, spec);
                    mean_gamma_key(result, seen);
                    if (algorithm == MomentAlgorithm::ChanLewisKahan && workers == 1 &&
                        order.kind == ReductionOrder::Kind::Natural) {
                        const auto& mid = result.levels[kMid];
                        const double se = std::sqrt(mid.variance / static_cast<double>(plan.paths));
                        worst_z = std::max(worst_z, std::abs(mid.mean - kAssetAnalyticValue) / se);
                    }
                }
            }
            max_distinct = std::max(max_distinct, seen.size());
        }

        const SimulationPlan plan = config.plan_for_run(run, MomentAlgorithm::Naive);
        const auto blocks = run_blocks<double>(plan, spec);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& order : orders) {
            const double g = summarize<double>(reduce<double>(blocks, order), plan, spec).gamma.gamma;
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
        min_spread = std::min(min_spread, (hi - lo) / std::abs(0.5 * (hi + lo)));
    }
    out.require(max_distinct == 1, "compensated (mean, gamma) patterns per run: " + std::to_string(max_distinct));
    out.require(min_spread >= 1e-6, "naive gamma min relative spread " + fmt("%.3g", min_spread));
    out.require(worst_z <= 3.0, "mean vs analytic max |z| " + fmt("%.2f", worst_z));
    return out;
}

Outcome cash_or_nothing() {
    ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::CashOrNothing);
    config.algorithms = {MomentAlgorithm::Naive, MomentAlgorithm::Ling, MomentAlgorithm::LingKahan,
                         MomentAlgorithm::ChanLewisKahan};
    const auto rows = run_experiment(config).rows;
    Outcome out;

    for (const auto* algorithm : {"naive", "ling-kahan", "chan-lewis-kahan"}) {
        double worst = 0;
        for (const auto& ordering : {"raw", "sorted"}) {
            for (const auto s : {Statistic::Mean, Statistic::Variance, Statistic::Gamma}) {
                worst = std::max(worst, find_row(rows, "0", algorithm, ordering, s).abs_err);
            }
        }
        out.require(worst == 0.0, std::string(algorithm) + " max error " + fmt("%.3g", worst));
    }
    const double ling_mean = find_row(rows, "0", "ling", "raw", Statistic::Mean).abs_err;
    out.require(ling_mean > 0.0, "ling mean error " + fmt("%.3g", ling_mean));

    ExperimentConfig rebate = config;
    rebate.rebate = 0.01;
    rebate.algorithms = {MomentAlgorithm::Naive, MomentAlgorithm::Ling};
    rebate.orderings = {Ordering::raw()};
    const auto rebate_rows = run_experiment(rebate).rows;
    const double naive_v = find_row(rebate_rows, "0", "naive", "raw", Statistic::Variance).abs_err;
    const double ling_v = find_row(rebate_rows, "0", "ling", "raw", Statistic::Variance).abs_err;
    out.require(ling_v < naive_v,
                "rebate 0.01 variance error ling " + fmt("%.3g", ling_v) + " vs naive " + fmt("%.3g", naive_v));
    return out;
}

Outcome oracle_suite() {
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-200, 200);
    Outcome out;

    bool exact = true;
    for (int i = 0; i < 1'000'000 && exact; ++i) {
        const double a = std::ldexp(mant(gen), expo(gen));
        const double b = std::ldexp(mant(gen), expo(gen));
        const auto [s, e] = two_sum(a, b);
        exact = s == a + b &&
                ExactNumber::from(s) + ExactNumber::from(e) == ExactNumber::from(a) + ExactNumber::from(b);
    }
    out.require(exact, "two_sum exact on 1e6 pairs");

    std::vector<double> xs(100000);
    std::uniform_int_distribution<int> wide(-1074, 1000);
    for (auto& x : xs) x = std::ldexp(mant(gen), wide(gen));
    const ExactNumber total = exact_sum(std::span<const double>(xs));
    bool invariant = true;
    for (int i = 0; i < 5; ++i) {
        std::shuffle(xs.begin(), xs.end(), gen);
        invariant = invariant && exact_sum(std::span<const double>(xs)) == total;
    }
    std::sort(xs.begin(), xs.end());
    invariant = invariant && exact_sum(std::span<const double>(xs)) == total;
    out.require(invariant, "oracle permutation invariance");

    std::uniform_int_distribution<std::int64_t> ints(-(std::int64_t{1} << 40), std::int64_t{1} << 40);
    std::vector<double> ys(100000);
    for (auto& y : ys) y = std::ldexp(static_cast<double>(ints(gen)), -10);
    const ExactNumber variance = exact_mean_variance(std::span<const double>(ys)).variance;
    bool shift = true;
    for (const double k : {1e5, -7.25, 3.0e9}) {
        std::vector<double> shifted(ys);
        for (auto& y : shifted) y += k;
        shift = shift && exact_mean_variance(std::span<const double>(shifted)).variance == variance;
    }
    out.require(shift, "exact variance shift invariance");

    bool round_trip = true;
    std::vector<double> specials{0.0, -0.0, std::numeric_limits<double>::max(), std::numeric_limits<double>::min(),
                                 std::numeric_limits<double>::denorm_min(), -std::numeric_limits<double>::max()};
    for (const double d : specials) round_trip = round_trip && ExactNumber::from(d).round<double>() == d;
    for (const double d : xs) {
        round_trip = round_trip && ExactNumber::from(d).round<double>() == d;
        const float f = static_cast<float>(d);
        if (std::isfinite(f)) round_trip = round_trip && ExactNumber::from(f).round<float>() == f;
    }
    out.require(round_trip, "round trip of finite test floats");
    return out;
}

Outcome merge_suite() {
    std::mt19937_64 gen(77);
    std::uniform_int_distribution<int> size(3, 64);
    std::uniform_real_distribution<double> loc(-1e6, 1e6);
    Outcome out;

    bool identity = true;
    double worst_mean_ulps = 0;
    double worst_variance_ulps = 0;
    for (int corpus = 0; corpus < 1000; ++corpus) {
        const int n = size(gen);
        std::normal_distribution<double> dist(loc(gen), 1.0);
        std::vector<double> xs(n);
        for (auto& x : xs) x = dist(gen);
        const auto exact = exact_mean_variance(std::span<const double>(xs));
        // The oracle mean as reported: correctly rounded to binary64.
        const ExactNumber oracle_mean = ExactNumber::from(exact.mean.round<double>());
        const std::size_t i = std::uniform_int_distribution<int>(1, n - 2)(gen);
        const std::size_t j = std::uniform_int_distribution<int>(static_cast<int>(i) + 1, n - 1)(gen);
        const std::span<const double> all(xs);

        for (const auto algorithm : kReproducibleMeanAlgorithms) {
            MomentAccumulator<double> a(algorithm);
            MomentAccumulator<double> b(algorithm);
            MomentAccumulator<double> c(algorithm);
            a.update(all.subspan(0, i));
            b.update(all.subspan(i, j - i));
            c.update(all.subspan(j));

            MomentAccumulator<double> left_empty(algorithm);
            left_empty.merge(a);
            MomentAccumulator<double> right_empty = a;
            right_empty.merge(MomentAccumulator<double>(algorithm));
            identity = identity && left_empty == a && right_empty == a;

            MomentAccumulator<double> left = a;
            left.merge(b).merge(c);
            MomentAccumulator<double> bc = b;
            bc.merge(c);
            MomentAccumulator<double> right = a;
            right.merge(bc);
            for (const auto& m : {left, right}) {
                const auto s = m.finalize();
                worst_mean_ulps = std::max(worst_mean_ulps, error_report<double>(s.mean, oracle_mean).ulps);
                worst_variance_ulps =
                    std::max(worst_variance_ulps, error_report<double>(s.variance, exact.variance).ulps);
            }
        }
    }
    out.require(identity, "merge identity");
    out.require(worst_mean_ulps <= 1.0, "associativity: mean max " + fmt("%.3g", worst_mean_ulps) +
                                            " ulp (variance max " + fmt("%.3g", worst_variance_ulps) + " ulp)");

    SimulationPlan plan;
    plan.paths = 100000;
    plan.seed = 5;
    const PayoffSpec spec;
    bool same = true;
    for (const auto algorithm : kReproducibleMeanAlgorithms) {
        plan.algorithm = algorithm;
        std::set<std::pair<double, double>> seen;
        for (const std::uint64_t block : {std::uint64_t{1}, std::uint64_t{1} << 14, plan.paths}) {
            plan.block_size = block;
            mean_gamma_key(run_parallel<double>(plan, spec), seen);
        }
        same = same && seen.size() == 1;
    }
    out.require(same, "block sizes 1, 2^14, N bit-identical");
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "normal experiment", 60, normal_experiment},
        {2, "permutation reproducibility", 60, permutation_reproducibility},
        {3, "uniform binary32 experiment", 300, uniform32_experiment},
        {4, "asset-or-nothing reproducibility", 120, asset_or_nothing},
        {5, "cash-or-nothing exactness", 120, cash_or_nothing},
        {6, "oracle suite", 10, oracle_suite},
        {7, "merge suite", 10, merge_suite},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome.require(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        outcome.require(seconds <= c.limit_seconds,
                        "time " + fmt("%.1f", seconds) + " s of " + fmt("%.0f", c.limit_seconds) + " s");
        if (!outcome.pass) ++failures;
        std::printf("criterion %d %-34s %s  %s\n", c.id, c.name, outcome.pass ? "PASS" : "FAIL",
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
