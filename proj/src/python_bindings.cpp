// Python bindings for the binary64 accumulators, the exact oracle, the
// random streams, the Monte-Carlo engine and the experiment runner.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcstats/compensated_sum.hpp"
#include "mcstats/exact.hpp"
#include "mcstats/experiments.hpp"
#include "mcstats/mc_engine.hpp"
#include "mcstats/moments.hpp"
#include "mcstats/rng.hpp"

namespace py = pybind11;
using namespace mcstats;

namespace {

template <IeeeReal Real, typename Kernel>
Real run_kernel(const std::vector<Real>& xs) {
    Kernel k{};
    for (const Real x : xs) k.add(x);
    return k.value();
}

template <IeeeReal Real>
Real sum_with(const std::vector<Real>& xs, const std::string& kernel) {
    if (kernel == "naive") return run_kernel<Real, NaiveSum<Real>>(xs);
    if (kernel == "kahan") return run_kernel<Real, KahanSum<Real>>(xs);
    if (kernel == "klein") return run_kernel<Real, KleinSum<Real>>(xs);
    if (kernel == "knuth") return run_kernel<Real, KnuthSum<Real>>(xs);
    throw std::invalid_argument("unknown kernel '" + kernel + "' (naive, kahan, klein, knuth)");
}

py::dict stats_dict(const SummaryStats<double>& s) {
    py::dict d;
    d["n"] = s.n;
    d["mean"] = s.mean;
    d["variance"] = s.variance;
    d["sum"] = s.sum;
    return d;
}

py::dict row_dict(const ReportRow& r) {
    py::dict d;
    d["experiment"] = r.experiment;
    d["run"] = r.run;
    d["algorithm"] = r.algorithm;
    d["ordering"] = r.ordering;
    d["statistic"] = std::string(to_string(r.statistic));
    d["bits_hex"] = r.bits_hex;
    d["exact"] = r.exact;
    d["abs_err"] = r.abs_err;
    d["rel_err"] = r.rel_err;
    d["ulps"] = r.ulps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Compensated streaming moments with an exact rational oracle";

    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("two_sum", [](double a, double b) {
        const auto [s, e] = two_sum(a, b);
        return py::make_tuple(s, e);
    }, py::arg("a"), py::arg("b"), "Error-free sum: s = fl(a + b) and s + err = a + b exactly.");

    m.def("compensated_sum", [](const std::vector<double>& xs, const std::string& kernel, int precision) -> double {
        if (precision == 64) return sum_with<double>(xs, kernel);
        if (precision == 32) {
            const std::vector<float> fs(xs.begin(), xs.end());
            return sum_with<float>(fs, kernel);
        }
        throw std::invalid_argument("precision must be 32 or 64");
    }, py::arg("values"), py::arg("kernel") = "kahan", py::arg("precision") = 64,
       "Sums in order with the given kernel. For precision 32 the values are first rounded to binary32.");

    m.attr("ALGORITHMS") = [] {
        std::vector<std::string> tags;
        for (const auto a : kAllMomentAlgorithms) tags.emplace_back(to_string(a));
        return tags;
    }();

    py::class_<MomentAccumulator<double>>(m, "MomentAccumulator")
        .def(py::init([](const std::string& tag) { return MomentAccumulator<double>(parse_moment_algorithm(tag)); }),
             py::arg("algorithm"))
        .def_property_readonly("algorithm",
                               [](const MomentAccumulator<double>& a) { return std::string(to_string(a.algorithm())); })
        .def_property_readonly("count", &MomentAccumulator<double>::count)
        .def("update", [](MomentAccumulator<double>& a, double x) { a.update(x); }, py::arg("x"))
        .def("update_many", [](MomentAccumulator<double>& a, const std::vector<double>& xs) {
            a.update(std::span<const double>(xs));
        }, py::arg("values"))
        .def("merge", &MomentAccumulator<double>::merge, py::arg("other"), py::return_value_policy::reference_internal)
        .def("normalize", &MomentAccumulator<double>::normalize)
        .def("finalize", [](const MomentAccumulator<double>& a, bool sample) {
            return stats_dict(a.finalize(sample ? VarianceKind::Sample : VarianceKind::Population));
        }, py::arg("sample") = false)
        .def("copy", [](const MomentAccumulator<double>& a) { return a; })
        .def(py::self == py::self);

    m.def("exact_mean_variance", [](const std::vector<double>& xs) {
        const auto mv = exact_mean_variance(std::span<const double>(xs));
        py::dict d;
        d["mean"] = mv.mean.round<double>();
        d["variance"] = mv.variance.round<double>();
        d["mean_rational"] = mv.mean.to_string();
        d["variance_rational"] = mv.variance.to_string();
        return d;
    }, py::arg("values"), "Exact population mean and variance, as rationals and correctly rounded to binary64.");

    m.def("exact_sum", [](const std::vector<double>& xs) {
        const ExactNumber s = exact_sum(std::span<const double>(xs));
        return py::make_tuple(s.round<double>(), s.to_string());
    }, py::arg("values"), "Exact sum as (correctly rounded binary64, \"p/q\").");

    m.def("random_bits_at", &random_bits_at, py::arg("seed"), py::arg("index"));
    m.def("uniform_at", &uniform_at, py::arg("seed"), py::arg("index"));
    m.def("uniform32_at", &uniform32_at, py::arg("seed"), py::arg("index"));
    m.def("normal_inverse_cdf", &normal_inverse_cdf, py::arg("u"));

    m.def("run_parallel", [](const std::string& payoff, std::uint64_t paths, std::uint64_t seed,
                             const std::string& algorithm, unsigned workers, std::uint64_t block_size,
                             double epsilon, double rebate, std::optional<std::uint64_t> order_seed) {
        PayoffSpec spec;
        spec.kind = payoff == "cash-or-nothing" ? PayoffKind::CashOrNothing : PayoffKind::AssetOrNothing;
        if (payoff != "cash-or-nothing" && payoff != "asset-or-nothing") {
            throw std::invalid_argument("payoff must be asset-or-nothing or cash-or-nothing");
        }
        spec.rebate = rebate;
        SimulationPlan plan;
        plan.paths = paths;
        plan.seed = seed;
        plan.algorithm = parse_moment_algorithm(algorithm);
        plan.workers = workers;
        plan.block_size = block_size;
        plan.epsilon = epsilon;
        const ReductionOrder order =
            order_seed ? ReductionOrder::by_completion(*order_seed) : ReductionOrder::natural();
        ParallelRunResult<double> r;
        {
            py::gil_scoped_release release;
            r = run_parallel<double>(plan, spec, order);
        }
        py::dict d;
        d["down"] = stats_dict(r.levels[kDown]);
        d["mid"] = stats_dict(r.levels[kMid]);
        d["up"] = stats_dict(r.levels[kUp]);
        d["gamma"] = r.gamma.gamma;
        return d;
    }, py::arg("payoff") = "asset-or-nothing", py::arg("paths") = 1'000'000, py::arg("seed") = 0,
       py::arg("algorithm") = "chan-lewis-kahan", py::arg("workers") = 1, py::arg("block_size") = 1 << 14,
       py::arg("epsilon") = 0.01, py::arg("rebate") = 0.0, py::arg("order_seed") = py::none(),
       "Prices a binary option; order_seed selects a seeded block completion order.");

    m.def("run_experiment", [](const std::string& kind, std::optional<std::uint64_t> n,
                               std::optional<std::uint64_t> runs, std::optional<std::uint64_t> seed,
                               std::optional<std::vector<std::string>> algorithms,
                               std::optional<std::vector<std::string>> orderings) {
        ExperimentConfig c = ExperimentConfig::defaults(parse_experiment_kind(kind));
        if (n) c.n = *n;
        if (runs) c.runs = *runs;
        if (seed) c.seed = *seed;
        if (algorithms) {
            c.algorithms.clear();
            c.knuth_row = false;
            for (const auto& tag : *algorithms) {
                if (tag == "naive-knuth") {
                    c.knuth_row = true;
                } else {
                    c.algorithms.push_back(parse_moment_algorithm(tag));
                }
            }
        }
        if (orderings) {
            c.orderings.clear();
            for (const auto& o : *orderings) c.orderings.push_back(Ordering::parse(o));
        }
        c.validate();
        ExperimentReport report;
        {
            py::gil_scoped_release release;
            report = run_experiment(c);
        }
        py::list rows;
        for (const auto& r : report.rows) rows.append(row_dict(r));
        return rows;
    }, py::arg("kind"), py::kw_only(), py::arg("n") = py::none(), py::arg("runs") = py::none(),
       py::arg("seed") = py::none(), py::arg("algorithms") = py::none(), py::arg("orderings") = py::none(),
       "Runs an experiment and returns its report rows as dicts.");
}
