#include "mcstats/experiments.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

#include "mcstats/compensated_sum.hpp"
#include "mcstats/exact.hpp"

namespace mcstats {
namespace {

constexpr std::string_view kKnuthRowLabel = "naive-knuth";

std::string format_double(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

template <IeeeReal Real>
ReportRow make_row(std::string_view experiment, std::uint64_t run, std::string_view algorithm,
                   const std::string& ordering, Statistic statistic, Real approx, const ExactNumber& exact) {
    // Errors are measured against the reference rounded to binary64, so a
    // correctly rounded binary64 result scores exactly zero.
    const Real reference = exact.round<Real>();
    const ErrorReport err = error_report<Real>(approx, ExactNumber::from(exact.round<double>()));
    ReportRow row;
    row.experiment = std::string(experiment);
    row.run = std::to_string(run);
    row.algorithm = std::string(algorithm);
    row.ordering = ordering;
    row.statistic = statistic;
    row.bits_hex = bits_hex(approx);
    row.exact = static_cast<double>(reference);
    row.abs_err = err.absolute;
    row.rel_err = err.relative;
    row.ulps = err.ulps;
    return row;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

double parse_double(std::string_view text, std::string_view what) {
    double value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        // from_chars does not accept "inf"/"nan" spellings produced by printf.
        if (text == "inf") return std::numeric_limits<double>::infinity();
        if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

void evaluate_mc_run(const ExperimentConfig& config, std::uint64_t run, ExperimentReport& report) {
    const PayoffSpec spec = config.payoff_spec();
    const SimulationPlan base = config.plan_for_run(run, config.algorithms.front());
    const std::string_view experiment = to_string(config.experiment);

    bool want_sorted = false;
    bool want_blocks = false;
    for (const auto& o : config.orderings) {
        (o.kind == Ordering::Kind::Sorted ? want_sorted : want_blocks) = true;
    }

    std::array<ExactAccumulator, kBumpLevels> exact;
    std::array<std::vector<double>, kBumpLevels> sorted;
    if (want_sorted) {
        auto payoffs = collect_payoffs(base, spec);
        for (std::size_t level = 0; level < kBumpLevels; ++level) {
            exact[level].add_moments(std::span<const double>(payoffs[level]));
            sorted[level] = std::move(payoffs[level]);
            std::stable_sort(sorted[level].begin(), sorted[level].end());
        }
    } else {
        exact = exact_payoff_moments(base, spec);
    }

    std::array<ExactMeanVariance, kBumpLevels> moments;
    for (std::size_t level = 0; level < kBumpLevels; ++level) moments[level] = exact_mean_variance(exact[level]);
    // Reference Gamma: the finite difference of the correctly rounded exact means.
    const double gamma_ref = gamma_fd(moments[kUp].mean.round<double>(), moments[kMid].mean.round<double>(),
                                      moments[kDown].mean.round<double>(), spec.spot, config.epsilon)
                                 .gamma;
    const ExactNumber gamma_exact = ExactNumber::from(gamma_ref);

    for (const MomentAlgorithm algorithm : config.algorithms) {
        const SimulationPlan plan = config.plan_for_run(run, algorithm);
        std::vector<BlockResult<double>> blocks;
        if (want_blocks) blocks = run_blocks<double>(plan, spec);

        for (const Ordering& ordering : config.orderings) {
            ParallelRunResult<double> result;
            switch (ordering.kind) {
                case Ordering::Kind::Raw:
                    result = summarize<double>(reduce<double>(blocks, ReductionOrder::natural()), plan, spec);
                    break;
                case Ordering::Kind::Permuted:
                    result = summarize<double>(reduce<double>(blocks, ReductionOrder::by_completion(ordering.seed)),
                                               plan, spec);
                    break;
                case Ordering::Kind::Sorted: {
                    std::array<MomentAccumulator<double>, kBumpLevels> accs{
                        MomentAccumulator<double>(algorithm), MomentAccumulator<double>(algorithm),
                        MomentAccumulator<double>(algorithm)};
                    for (std::size_t level = 0; level < kBumpLevels; ++level) {
                        accs[level].update(std::span<const double>(sorted[level]));
                    }
                    result = summarize<double>(accs, plan, spec);
                    break;
                }
            }
            const std::string label = ordering.label();
            const auto& mid = result.levels[kMid];
            report.rows.push_back(make_row<double>(experiment, run, to_string(algorithm), label, Statistic::Mean,
                                                   mid.mean, moments[kMid].mean));
            report.rows.push_back(make_row<double>(experiment, run, to_string(algorithm), label,
                                                   Statistic::Variance, mid.variance, moments[kMid].variance));
            report.rows.push_back(make_row<double>(experiment, run, to_string(algorithm), label, Statistic::Gamma,
                                                   result.gamma.gamma, gamma_exact));
            report.records.push_back({std::string(experiment), run, std::string(to_string(algorithm)), label,
                                      ordering.seed, std::bit_cast<std::uint64_t>(mid.mean),
                                      std::bit_cast<std::uint64_t>(mid.variance),
                                      std::bit_cast<std::uint64_t>(result.gamma.gamma)});
        }
    }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
    switch (kind) {
        case ExperimentKind::Normal: return "normal";
        case ExperimentKind::Uniform32: return "uniform32";
        case ExperimentKind::AssetOrNothing: return "asset-or-nothing";
        case ExperimentKind::CashOrNothing: return "cash-or-nothing";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
    for (const auto kind : {ExperimentKind::Normal, ExperimentKind::Uniform32, ExperimentKind::AssetOrNothing,
                            ExperimentKind::CashOrNothing}) {
        if (to_string(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

std::string Ordering::label() const {
    switch (kind) {
        case Kind::Raw: return "raw";
        case Kind::Sorted: return "sorted";
        case Kind::Permuted: return "perm:" + std::to_string(seed);
    }
    return "unknown";
}

Ordering Ordering::parse(std::string_view text) {
    if (text == "raw") return raw();
    if (text == "sorted") return sorted();
    for (const std::string_view prefix : {"perm:", "permuted:"}) {
        if (text.starts_with(prefix)) return permuted(parse_u64(text.substr(prefix.size()), "permutation seed"));
    }
    throw std::invalid_argument("unknown ordering '" + std::string(text) + "' (expected raw, sorted or perm:<seed>)");
}

std::string_view to_string(Statistic s) noexcept {
    switch (s) {
        case Statistic::Sum: return "S";
        case Statistic::Mean: return "M";
        case Statistic::Variance: return "V";
        case Statistic::Gamma: return "Gamma";
    }
    return "?";
}

Statistic parse_statistic(std::string_view text) {
    for (const auto s : {Statistic::Sum, Statistic::Mean, Statistic::Variance, Statistic::Gamma}) {
        if (to_string(s) == text) return s;
    }
    throw std::invalid_argument("unknown statistic '" + std::string(text) + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
        case ExperimentKind::Normal:
            c.n = 100'000;
            c.runs = 100;
            break;
        case ExperimentKind::Uniform32:
            c.n = 50'000'000;
            c.runs = 10;
            c.knuth_row = true;
            break;
        case ExperimentKind::AssetOrNothing:
            c.n = 1'000'000;
            c.runs = 10;
            c.algorithms = {MomentAlgorithm::Naive,     MomentAlgorithm::NaiveKahan,
                            MomentAlgorithm::ShiftedNaiveKahan, MomentAlgorithm::Ling,
                            MomentAlgorithm::LingKahan, MomentAlgorithm::ChanLewisKahan};
            break;
        case ExperimentKind::CashOrNothing:
            c.n = 10'000'000;
            c.runs = 1;
            c.algorithms = {MomentAlgorithm::Naive, MomentAlgorithm::Ling, MomentAlgorithm::LingKahan,
                            MomentAlgorithm::ChanLewisKahan};
            break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (n == 0) throw std::invalid_argument("n must be at least 1");
    if (runs == 0) throw std::invalid_argument("runs must be at least 1");
    if (orderings.empty()) throw std::invalid_argument("at least one ordering is required");
    if (algorithms.empty() && !(knuth_row && !is_monte_carlo())) {
        throw std::invalid_argument("at least one algorithm is required");
    }
    if (!(sigma >= 0)) throw std::invalid_argument("sigma must be non-negative");
    if (experiment == ExperimentKind::Uniform32 && n > (std::uint64_t{1} << 32)) {
        throw std::invalid_argument("uniform32 supports at most 2^32 samples");
    }
    if (is_monte_carlo()) {
        if (knuth_row) throw std::invalid_argument("the naive-knuth row applies to sample experiments only");
        if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
        if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive for the Gamma estimate");
        payoff_spec().validate();
        plan_for_run(0, algorithms.front()).validate();
    } else if (rebate != 0) {
        throw std::invalid_argument("rebate applies to cash-or-nothing only");
    }
}

PayoffSpec ExperimentConfig::payoff_spec() const {
    PayoffSpec spec;
    spec.kind = experiment == ExperimentKind::CashOrNothing ? PayoffKind::CashOrNothing : PayoffKind::AssetOrNothing;
    spec.rebate = rebate;
    return spec;
}

SimulationPlan ExperimentConfig::plan_for_run(std::uint64_t run, MomentAlgorithm algorithm) const {
    SimulationPlan plan;
    plan.paths = n;
    plan.block_size = block_size;
    plan.workers = workers;
    plan.seed = seed + run;
    plan.algorithm = algorithm;
    plan.epsilon = epsilon;
    return plan;
}

template <IeeeReal Real>
void evaluate_samples(const ExperimentConfig& config, std::uint64_t run, std::span<const Real> samples,
                      std::vector<ReportRow>& rows, std::string_view label) {
    if (samples.empty()) throw std::invalid_argument("cannot evaluate an empty sample");
    const std::string_view experiment = label.empty() ? to_string(config.experiment) : label;

    ExactAccumulator reference;
    reference.add_moments(samples);
    const ExactNumber exact_sum = reference.sum();
    const ExactMeanVariance exact = exact_mean_variance(reference);

    for (const Ordering& ordering : config.orderings) {
        std::vector<Real> storage;
        std::span<const Real> view = samples;
        if (ordering.kind != Ordering::Kind::Raw) {
            storage = ordering.kind == Ordering::Kind::Sorted ? sort_ascending(samples)
                                                              : permute(samples, ordering.seed);
            view = storage;
            if (mcstats::exact_sum(view) != exact_sum) {
                throw std::logic_error("reordering changed the sample multiset");
            }
        }
        const std::string order_label = ordering.label();

        for (const MomentAlgorithm algorithm : config.algorithms) {
            MomentAccumulator<Real> acc(algorithm);
            acc.update(view);
            const SummaryStats<Real> stats = acc.finalize();
            const auto tag = to_string(algorithm);
            rows.push_back(make_row<Real>(experiment, run, tag, order_label, Statistic::Sum, stats.sum, exact_sum));
            rows.push_back(make_row<Real>(experiment, run, tag, order_label, Statistic::Mean, stats.mean, exact.mean));
            rows.push_back(
                make_row<Real>(experiment, run, tag, order_label, Statistic::Variance, stats.variance, exact.variance));
        }

        if (config.knuth_row) {
            KnuthSum<Real> sum;
            KnuthSum<Real> squares;
            for (const Real x : view) {
                sum.add(x);
                squares.add(x * x);
            }
            const Real n = static_cast<Real>(view.size());
            const Real s = sum.value();
            const Real mean = s / n;
            const Real variance = squares.value() / n - mean * mean;
            rows.push_back(make_row<Real>(experiment, run, kKnuthRowLabel, order_label, Statistic::Sum, s, exact_sum));
            rows.push_back(make_row<Real>(experiment, run, kKnuthRowLabel, order_label, Statistic::Mean, mean, exact.mean));
            rows.push_back(
                make_row<Real>(experiment, run, kKnuthRowLabel, order_label, Statistic::Variance, variance, exact.variance));
        }
    }
}

template void evaluate_samples<float>(const ExperimentConfig&, std::uint64_t, std::span<const float>,
                                      std::vector<ReportRow>&, std::string_view);
template void evaluate_samples<double>(const ExperimentConfig&, std::uint64_t, std::span<const double>,
                                       std::vector<ReportRow>&, std::string_view);

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;

    for (std::uint64_t run = 0; run < config.runs; ++run) {
        const std::uint64_t seed = config.seed + run;
        switch (config.experiment) {
            case ExperimentKind::Normal: {
                std::vector<double> samples(config.n);
                StreamCursor cursor(seed);
                for (auto& x : samples) x = config.mu + config.sigma * cursor.next_normal();
                evaluate_samples<double>(config, run, samples, report.rows);
                break;
            }
            case ExperimentKind::Uniform32: {
                std::vector<float> samples(config.n);
                StreamCursor cursor(seed);
                for (auto& x : samples) x = cursor.next_uniform32();
                evaluate_samples<float>(config, run, samples, report.rows);
                break;
            }
            case ExperimentKind::AssetOrNothing:
            case ExperimentKind::CashOrNothing: evaluate_mc_run(config, run, report); break;
        }
    }
    append_aggregate_rows(report.rows);
    return report;
}

void append_aggregate_rows(std::vector<ReportRow>& rows) {
    struct Totals {
        ReportRow first;
        double exact = 0, abs_err = 0, rel_err = 0, ulps = 0;
        std::size_t count = 0;
    };
    std::vector<Totals> groups;
    std::map<std::tuple<std::string, std::string, std::string, Statistic>, std::size_t> index;
    for (const auto& row : rows) {
        if (row.run == "mean") continue;
        const auto key = std::tuple(row.experiment, row.algorithm, row.ordering, row.statistic);
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) groups.push_back({row});
        Totals& t = groups[it->second];
        t.exact += row.exact;
        t.abs_err += row.abs_err;
        t.rel_err += row.rel_err;
        t.ulps += row.ulps;
        ++t.count;
    }
    for (const auto& t : groups) {
        ReportRow row = t.first;
        const double n = static_cast<double>(t.count);
        row.run = "mean";
        row.bits_hex.clear();
        row.exact = t.exact / n;
        row.abs_err = t.abs_err / n;
        row.rel_err = t.rel_err / n;
        row.ulps = t.ulps / n;
        if (row.binary32()) row.exact = static_cast<double>(static_cast<float>(row.exact));
        rows.push_back(std::move(row));
    }
}

std::string bits_hex(double x) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(x)));
    return buf;
}

std::string bits_hex(float x) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(std::bit_cast<std::uint32_t>(x)));
    return buf;
}

void write_csv(std::ostream& out, std::span<const ReportRow> rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.run << ',' << r.algorithm << ',' << r.ordering << ','
            << to_string(r.statistic) << ',' << r.bits_hex << ',' << format_double(r.exact, r.binary32() ? 9 : 17)
            << ',' << format_double(r.abs_err, 17) << ',' << format_double(r.rel_err, 17) << ','
            << format_double(r.ulps, 17) << '\n';
    }
}

void emit_csv(std::span<const ReportRow> rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_csv(out, rows);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<ReportRow> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::invalid_argument("missing or unexpected CSV header");
    }
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
            fields.push_back(rest.substr(0, pos));
        }
        fields.push_back(rest);
        if (fields.size() != 10) throw std::invalid_argument("expected 10 CSV fields in '" + line + "'");
        ReportRow r;
        r.experiment = std::string(fields[0]);
        r.run = std::string(fields[1]);
        r.algorithm = std::string(fields[2]);
        r.ordering = std::string(fields[3]);
        r.statistic = parse_statistic(fields[4]);
        r.bits_hex = std::string(fields[5]);
        r.exact = parse_double(fields[6], "exact value");
        r.abs_err = parse_double(fields[7], "absolute error");
        r.rel_err = parse_double(fields[8], "relative error");
        r.ulps = parse_double(fields[9], "ulps");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string render_markdown(std::span<const ReportRow> rows) {
    bool has_aggregate = false;
    for (const auto& r : rows) has_aggregate = has_aggregate || r.run == "mean";

    std::vector<std::string> algorithms;
    std::vector<std::pair<std::string, Statistic>> columns;
    std::map<std::pair<std::string, std::pair<std::string, Statistic>>, double> cells;
    auto remember = [](auto& list, const auto& value) {
        if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(value);
    };
    for (const auto& r : rows) {
        if (has_aggregate ? r.run != "mean" : r.run != rows.front().run) continue;
        remember(algorithms, r.algorithm);
        remember(columns, std::pair(r.ordering, r.statistic));
        cells[{r.algorithm, {r.ordering, r.statistic}}] = r.experiment == "normal" ? r.rel_err : r.abs_err;
    }

    std::ostringstream out;
    out << "| Algorithm |";
    for (const auto& [ordering, statistic] : columns) out << ' ' << ordering << ' ' << to_string(statistic) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& algorithm : algorithms) {
        out << "| " << algorithm << " |";
        for (const auto& column : columns) {
            const auto it = cells.find({algorithm, column});
            if (it == cells.end()) {
                out << "  |";
            } else if (it->second == 0) {
                out << " 0 |";
            } else {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.2E", it->second);
                out << ' ' << buf << " |";
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace mcstats
