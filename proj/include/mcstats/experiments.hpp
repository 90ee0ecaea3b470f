#pragma once

/// \file
/// Accuracy experiments: generate a sample set, evaluate every requested
/// algorithm on every requested ordering of the same samples, and compare
/// each statistic against the exact reference.

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcstats/mc_engine.hpp"
#include "mcstats/moments.hpp"
#include "mcstats/rng.hpp"

namespace mcstats {

enum class ExperimentKind : std::uint8_t { Normal, Uniform32, AssetOrNothing, CashOrNothing };

[[nodiscard]] std::string_view to_string(ExperimentKind kind) noexcept;
/// Accepts "normal", "uniform32", "asset-or-nothing", "cash-or-nothing".
[[nodiscard]] ExperimentKind parse_experiment_kind(std::string_view name);

/// How the samples are presented to the accumulators.
///
/// For the Monte-Carlo experiments `Raw` is the natural block reduction,
/// `Permuted` a seeded block completion order, and `Sorted` a sequential pass
/// over the payoffs sorted in ascending order.
struct Ordering {
    enum class Kind : std::uint8_t { Raw, Sorted, Permuted };
    Kind kind = Kind::Raw;
    std::uint64_t seed = 0;

    [[nodiscard]] static Ordering raw() noexcept { return {}; }
    [[nodiscard]] static Ordering sorted() noexcept { return {Kind::Sorted, 0}; }
    [[nodiscard]] static Ordering permuted(std::uint64_t seed) noexcept { return {Kind::Permuted, seed}; }

    /// "raw", "sorted" or "perm:<seed>".
    [[nodiscard]] std::string label() const;
    [[nodiscard]] static Ordering parse(std::string_view text);

    bool operator==(const Ordering&) const noexcept = default;
};

template <typename T>
[[nodiscard]] std::vector<T> sort_ascending(std::span<const T> xs) {
    std::vector<T> out(xs.begin(), xs.end());
    std::stable_sort(out.begin(), out.end());
    return out;
}

template <typename T>
[[nodiscard]] std::vector<T> permute(std::span<const T> xs, std::uint64_t seed) {
    std::vector<T> out(xs.begin(), xs.end());
    seeded_shuffle(std::span<T>(out), seed);
    return out;
}

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Normal;
    std::uint64_t n = 100'000;  ///< samples, or paths for the Monte-Carlo experiments
    double mu = 1e5;
    double sigma = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t runs = 100;
    std::vector<Ordering> orderings{Ordering::raw(), Ordering::sorted()};
    std::vector<MomentAlgorithm> algorithms{kAllMomentAlgorithms.begin(), kAllMomentAlgorithms.end()};
    /// Adds a "naive-knuth" row: S and T summed with KnuthSum, naive finalize.
    bool knuth_row = false;
    unsigned workers = 1;
    std::uint64_t block_size = std::uint64_t{1} << 14;
    double epsilon = 0.01;
    double rebate = 0.0;

    /// Experiment-specific defaults (sample counts, runs, algorithm rows).
    [[nodiscard]] static ExperimentConfig defaults(ExperimentKind kind);

    /// Throws std::invalid_argument describing the first bad field.
    void validate() const;

    [[nodiscard]] bool is_monte_carlo() const noexcept {
        return experiment == ExperimentKind::AssetOrNothing || experiment == ExperimentKind::CashOrNothing;
    }
    [[nodiscard]] PayoffSpec payoff_spec() const;
    [[nodiscard]] SimulationPlan plan_for_run(std::uint64_t run, MomentAlgorithm algorithm) const;
};

enum class Statistic : std::uint8_t { Sum, Mean, Variance, Gamma };

[[nodiscard]] std::string_view to_string(Statistic s) noexcept;
[[nodiscard]] Statistic parse_statistic(std::string_view text);

/// One CSV line. `run` is the run number, or "mean" for the aggregate over
/// runs (whose bits_hex is empty). `exact` is the reference correctly
/// rounded to the row's precision. Errors compare the approximation with the
/// reference rounded to binary64; `ulps` is in units of the row's precision
/// at the reference's binade.
struct ReportRow {
    std::string experiment;
    std::string run;
    std::string algorithm;
    std::string ordering;
    Statistic statistic = Statistic::Mean;
    std::string bits_hex;
    double exact = 0;  ///< correctly rounded exact value, in the experiment's precision
    double abs_err = 0;
    double rel_err = 0;
    double ulps = 0;

    /// Per-run rows carry 8 hex digits for binary32; aggregate rows only
    /// occur in the uniform32 experiment.
    [[nodiscard]] bool binary32() const noexcept { return bits_hex.size() == 8 || experiment == "uniform32"; }
    bool operator==(const ReportRow&) const noexcept = default;
};

/// Bit patterns of one Monte-Carlo evaluation, for auditing reproducibility.
struct McRecord {
    std::string experiment;
    std::uint64_t run = 0;
    std::string algorithm;
    std::string ordering;
    std::uint64_t ordering_seed = 0;
    std::uint64_t mean_bits = 0;
    std::uint64_t variance_bits = 0;
    std::uint64_t gamma_bits = 0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<McRecord> records;
};

/// Throws std::invalid_argument for an invalid config before computing
/// anything.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config);

/// Evaluates a fixed sample set (one run) and appends its rows. Used by
/// run_experiment and handy for hand-checkable corpora. `label` overrides
/// the experiment column when non-empty.
template <IeeeReal Real>
void evaluate_samples(const ExperimentConfig& config, std::uint64_t run, std::span<const Real> samples,
                      std::vector<ReportRow>& rows, std::string_view label = {});

/// Appends one "mean" row per (algorithm, ordering, statistic) averaging the
/// per-run rows.
void append_aggregate_rows(std::vector<ReportRow>& rows);

inline constexpr std::string_view kCsvHeader =
    "experiment,run,algorithm,ordering,statistic,bits_hex,exact,abs_err,rel_err,ulps";

void write_csv(std::ostream& out, std::span<const ReportRow> rows);
/// Throws IoError with the path in the message.
void emit_csv(std::span<const ReportRow> rows, const std::string& path);
/// Inverse of write_csv. Throws std::invalid_argument on malformed input.
[[nodiscard]] std::vector<ReportRow> parse_csv(std::istream& in);

/// Error table laid out like the published ones: one line per algorithm,
/// one column per (ordering, statistic). Uses the aggregate rows when
/// present, relative errors for the normal experiment and absolute otherwise.
[[nodiscard]] std::string render_markdown(std::span<const ReportRow> rows);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] std::string bits_hex(double x);
[[nodiscard]] std::string bits_hex(float x);

}  // namespace mcstats
