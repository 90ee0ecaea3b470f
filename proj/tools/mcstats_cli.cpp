// mcstats command-line front end.
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 I/O failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcstats/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Writes to `path`, or stdout when the path is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        if (!std::cout) throw mcstats::IoError("failed writing to standard output");
        return;
    }
    std::ofstream out(path);
    if (!out) throw mcstats::IoError("cannot open '" + path + "' for writing");
    fn(out);
    out.flush();
    if (!out) throw mcstats::IoError("failed writing '" + path + "'");
}

std::string hex64(std::uint64_t bits) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    return buf;
}

void write_records(std::ostream& out, const std::vector<mcstats::McRecord>& records) {
    for (const auto& r : records) {
        const nlohmann::ordered_json line = {
            {"experiment", r.experiment},       {"run", r.run},
            {"algorithm", r.algorithm},         {"ordering", r.ordering},
            {"ordering_seed", r.ordering_seed}, {"mean_bits", hex64(r.mean_bits)},
            {"variance_bits", hex64(r.variance_bits)}, {"gamma_bits", hex64(r.gamma_bits)},
        };
        out << line.dump() << '\n';
    }
}

struct ExperimentOptions {
    std::string kind;
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    std::uint64_t runs = 0;
    double mu = 0;
    double sigma = 0;
    std::string orderings;
    std::string algos;
    unsigned workers = 1;
    std::uint64_t block_size = 0;
    double epsilon = 0;
    double rebate = 0;
    std::string out;
    std::string records;
    bool markdown = false;
};

mcstats::ExperimentConfig build_config(const ExperimentOptions& o, const CLI::App& cmd) {
    using namespace mcstats;
    ExperimentConfig c = ExperimentConfig::defaults(parse_experiment_kind(o.kind));
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    if (given("--seed")) c.seed = o.seed;
    if (given("--n")) c.n = o.n;
    if (given("--runs")) c.runs = o.runs;
    if (given("--mu")) c.mu = o.mu;
    if (given("--sigma")) c.sigma = o.sigma;
    if (given("--workers")) c.workers = o.workers;
    if (given("--block-size")) c.block_size = o.block_size;
    if (given("--epsilon")) c.epsilon = o.epsilon;
    if (given("--rebate")) c.rebate = o.rebate;
    if (given("--orderings")) {
        c.orderings.clear();
        for (const auto& item : split_list(o.orderings)) c.orderings.push_back(Ordering::parse(item));
    }
    if (given("--algos")) {
        c.algorithms.clear();
        c.knuth_row = false;
        for (const auto& item : split_list(o.algos)) {
            if (item == "naive-knuth") {
                c.knuth_row = true;
            } else {
                c.algorithms.push_back(parse_moment_algorithm(item));
            }
        }
    }
    c.validate();
    return c;
}

int run_experiment_command(const ExperimentOptions& o, const CLI::App& cmd) {
    const mcstats::ExperimentConfig config = build_config(o, cmd);
    const mcstats::ExperimentReport report = mcstats::run_experiment(config);
    with_output(o.out, [&](std::ostream& out) {
        if (o.markdown) {
            out << mcstats::render_markdown(report.rows);
        } else {
            mcstats::write_csv(out, report.rows);
        }
    });
    if (!o.records.empty()) with_output(o.records, [&](std::ostream& out) { write_records(out, report.records); });
    return kExitOk;
}

template <mcstats::IeeeReal Real>
std::vector<Real> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mcstats::IoError("cannot open '" + path + "' for reading");
    std::vector<Real> xs;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        Real x{};
        const char* begin = line.data() + first;
        const char* end = line.data() + last + 1;
        const auto [ptr, ec] = std::from_chars(begin, end, x);
        if (ec != std::errc{} || ptr != end || !std::isfinite(x)) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": not a finite number: '" +
                              std::string(begin, end) + "'");
        }
        xs.push_back(x);
    }
    if (in.bad()) throw mcstats::IoError("failed reading '" + path + "'");
    if (xs.empty()) throw ConfigError("'" + path + "' contains no samples");
    return xs;
}

struct SumOptions {
    std::string algo;
    std::string input;
    int precision = 64;
    std::string out;
};

int run_sum_command(const SumOptions& o) {
    mcstats::ExperimentConfig config;
    config.runs = 1;
    config.orderings = {mcstats::Ordering::raw()};
    config.algorithms.clear();
    if (o.algo == "naive-knuth") {
        config.knuth_row = true;
    } else {
        config.algorithms.push_back(mcstats::parse_moment_algorithm(o.algo));
    }
    std::vector<mcstats::ReportRow> rows;
    if (o.precision == 32) {
        const auto xs = read_samples<float>(o.input);
        mcstats::evaluate_samples<float>(config, 0, xs, rows, "sum");
    } else {
        const auto xs = read_samples<double>(o.input);
        mcstats::evaluate_samples<double>(config, 0, xs, rows, "sum");
    }
    with_output(o.out, [&](std::ostream& out) { mcstats::write_csv(out, rows); });
    return kExitOk;
}

int run_table_command(const std::string& input, const std::string& out_path) {
    std::ifstream in(input);
    if (!in) throw mcstats::IoError("cannot open '" + input + "' for reading");
    std::vector<mcstats::ReportRow> rows;
    try {
        rows = mcstats::parse_csv(in);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(input + ": " + e.what());
    }
    with_output(out_path, [&](std::ostream& out) { out << mcstats::render_markdown(rows); });
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accuracy and reproducibility experiments for streaming mean/variance algorithms"};
    app.require_subcommand(1);

    ExperimentOptions eo;
    auto* experiment = app.add_subcommand("experiment", "Run one of the accuracy experiments and emit CSV");
    experiment->add_option("kind", eo.kind, "normal | uniform32 | asset-or-nothing | cash-or-nothing")
        ->required()
        ->check(CLI::IsMember({"normal", "uniform32", "asset-or-nothing", "cash-or-nothing"}));
    experiment->add_option("--seed", eo.seed, "Base seed; run r uses seed + r");
    experiment->add_option("--n", eo.n, "Samples per run (paths for the option experiments)");
    experiment->add_option("--runs", eo.runs, "Number of runs");
    experiment->add_option("--mu", eo.mu, "Mean of the normal samples");
    experiment->add_option("--sigma", eo.sigma, "Standard deviation of the normal samples");
    experiment->add_option("--orderings", eo.orderings, "Comma list of raw, sorted, perm:<seed>");
    experiment->add_option("--algos", eo.algos, "Comma list of algorithm tags (naive-knuth adds the Knuth row)");
    experiment->add_option("--workers", eo.workers, "Worker threads for the option experiments");
    experiment->add_option("--block-size", eo.block_size, "Paths per block");
    experiment->add_option("--epsilon", eo.epsilon, "Relative spot bump for Gamma");
    experiment->add_option("--rebate", eo.rebate, "Cash-or-nothing payment below the strike");
    experiment->add_option("--out", eo.out, "CSV output path (default: stdout)");
    experiment->add_option("--records", eo.records, "JSON-lines bit-pattern records for the option experiments");
    experiment->add_flag("--markdown", eo.markdown, "Write the Markdown error table instead of CSV");

    SumOptions so;
    auto* sum = app.add_subcommand("sum", "Evaluate one algorithm on a file of numbers (one per line)");
    sum->add_option("--algo", so.algo, "Algorithm tag")->required();
    sum->add_option("--input", so.input, "Input file")->required();
    sum->add_option("--precision", so.precision, "Accumulator precision in bits")
        ->check(CLI::IsMember({32, 64}))
        ->capture_default_str();
    sum->add_option("--out", so.out, "CSV output path (default: stdout)");

    std::string table_input;
    std::string table_out;
    auto* table = app.add_subcommand("table", "Render a report CSV as a Markdown error table");
    table->add_option("--input", table_input, "Report CSV")->required();
    table->add_option("--out", table_out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*experiment) return run_experiment_command(eo, *experiment);
        if (*sum) return run_sum_command(so);
        if (*table) return run_table_command(table_input, table_out);
    } catch (const mcstats::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
