// knet: fit, evaluate, check and benchmark Kolmogorov superposition networks.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "knet/jobs.hpp"

namespace {

using namespace knet;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw InputError("failed writing " + path);
}

CsvTable read_csv_file(const std::string& path) {
    std::istringstream in(read_file(path));
    return read_csv(in);
}

struct Options {
    JobConfig config;
    std::string tolerance = "0";
    std::string damping = "1/2";
    std::string weights;
    std::string in;
    std::string out;
    std::string model;
    std::string report;
    bool no_timing = false;
    bool dot = false;
};

void finish_config(Options& o) {
    try {
        o.config.tolerance = parse_rational(o.tolerance);
        o.config.damping = parse_rational(o.damping);
        if (!o.weights.empty()) {
            std::vector<Rational> weights;
            std::istringstream is(o.weights);
            std::string cell;
            while (std::getline(is, cell, ',')) weights.push_back(parse_rational(cell));
            o.config.weights = std::move(weights);
        }
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
    o.config.timing = !o.no_timing;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--d", o.config.d, "Input dimension d (>= 2)");
    cmd->add_option("--gamma", o.config.gamma, "Digit base gamma (>= 2d+2)");
    cmd->add_option("--depth", o.config.depth, "Digit depth k of phi evaluations");
    cmd->add_option("--depth-cap", o.config.depth_cap, "Largest depth tried by the separation retries");
    cmd->add_option("--seed", o.config.seed, "Random seed");
    cmd->add_option("--weights", o.weights, "Custom inner weights w(0..gamma-1), comma separated");
    cmd->add_option("--report", o.report, "Report path (default: stdout)");
    cmd->add_flag("--no-timing", o.no_timing, "Omit timing fields from the report");
}

void add_fit_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--mode", o.config.mode, "exact | iterative")->check(CLI::IsMember({"exact", "iterative"}));
    cmd->add_option("--numeric", o.config.numeric, "exact | fast")->check(CLI::IsMember({"exact", "fast"}));
    cmd->add_option("--grid-level", o.config.grid_level, "Lattice level for iterative fits");
    cmd->add_option("--tolerance", o.tolerance, "Stop when the grid sup-residual is at most this");
    cmd->add_option("--max-iter", o.config.max_iter, "Maximum iterative rounds");
    cmd->add_option("--damping", o.damping, "Damping factor in (0, 1]");
    cmd->add_option("--function", o.config.function,
                    "Built-in target (product, sum, indicator, inverse, zero, one)");
}

int run_fit(Options& o) {
    finish_config(o);
    SampleSet samples;
    if (!o.in.empty()) {
        samples = samples_from_csv(read_csv_file(o.in), o.config.d);
    } else if (o.config.mode == "exact") {
        throw InputError("fit --mode exact needs --in samples.csv");
    }
    if (o.out.empty()) throw InputError("fit needs --out model.json");
    FitJobResult result = fit_job(o.config, samples);
    if (result.model) save(*result.model, o.out);
    write_output(o.report, result.report.dump(2) + "\n");
    if (result.exit_code == kExitSeparationFailure) {
        std::cerr << "separation failure: "
                  << result.report["separation_failure"]["message"].get<std::string>() << "\n  mu = "
                  << result.report["separation_failure"]["mu"].dump() << " on rows "
                  << result.report["separation_failure"]["closed_path_rows"].dump() << "\n";
    }
    return result.exit_code;
}

int run_eval(Options& o) {
    finish_config(o);
    if (o.model.empty() || o.in.empty()) throw InputError("eval needs --model and --in");
    const KNetModel model = load_file(o.model);
    const EvalJobResult result = eval_job(o.config, model, read_csv_file(o.in));
    write_output(o.out, result.csv);
    if (!o.report.empty()) write_output(o.report, result.report.dump(2) + "\n");
    return kExitOk;
}

int run_check(Options& o) {
    finish_config(o);
    const Json report = check_job(o.config);
    write_output(o.report.empty() ? o.out : o.report, report.dump(2) + "\n");
    return kExitOk;
}

int run_bench(Options& o) {
    finish_config(o);
    const BenchJobResult result = bench_job(o.config);
    write_output(o.out, result.csv);
    if (!o.report.empty()) write_output(o.report, result.report.dump(2) + "\n");
    return kExitOk;
}

int run_describe(Options& o) {
    if (o.model.empty()) throw InputError("describe needs --model");
    const TopologyReport topology = describe(load_file(o.model));
    write_output(o.out, o.dot ? topology.to_dot() : topology.to_json().dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kolmogorov superposition networks with exact outer-function fitting"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "Fit the outer function to samples and write a model file");
    add_common(fit, o);
    add_fit_options(fit, o);
    fit->add_option("--in", o.in, "Samples CSV: d coordinate columns then the target, header required");
    fit->add_option("--out", o.out, "Model file to write");

    auto* eval = app.add_subcommand("eval", "Evaluate a model at the points of a CSV file");
    eval->add_option("--model", o.model, "Model file")->required();
    eval->add_option("--in", o.in, "Points CSV (d columns, optional target column)")->required();
    eval->add_option("--out", o.out, "Output CSV (default: stdout)");
    eval->add_option("--numeric", o.config.numeric, "exact | fast")->check(CLI::IsMember({"exact", "fast"}));
    eval->add_option("--report", o.report, "Optional report path");

    auto* check = app.add_subcommand("check", "Run the inner-function, range and separation checks");
    add_common(check, o);
    check->add_option("--grid-level", o.config.probe_level, "Lattice level of the range sweep (default 2)");
    check->add_option("--samples", o.config.samples, "Random samples for the inner-function checks");
    check->add_option("--trials", o.config.trials, "Randomized separation trials");
    check->add_option("--trial-points", o.config.trial_points, "Points per separation trial");
    check->add_option("--out", o.out, "Report path (alias of --report)");

    auto* bench = app.add_subcommand("bench", "Sweep sample sizes, depths and lattice levels; emit CSV");
    add_common(bench, o);
    add_fit_options(bench, o);
    bench->add_option("--sizes", o.config.sizes, "Sample sizes of the exact fits")->delimiter(',');
    bench->add_option("--depths", o.config.depths, "Depths of the exact fits")->delimiter(',');
    bench->add_option("--grid-levels", o.config.grid_levels, "Lattice levels of the iterative fits")->delimiter(',');
    bench->add_option("--out", o.out, "CSV output (default: stdout)");

    auto* desc = app.add_subcommand("describe", "Print layer widths, constants and knot counts of a model");
    desc->add_option("--model", o.model, "Model file")->required();
    desc->add_option("--out", o.out, "Output path (default: stdout)");
    desc->add_flag("--dot", o.dot, "Emit a Graphviz description instead of JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*fit) return run_fit(o);
        if (*eval) return run_eval(o);
        if (*check) return run_check(o);
        if (*bench) return run_bench(o);
        if (*desc) return run_describe(o);
    } catch (const ParseError& e) {
        std::cerr << "error: model file " << e.what() << "\n";
        return kExitInputError;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const SeparationFailure& e) {
        std::cerr << "separation failure: " << e.what() << "\n";
        return kExitSeparationFailure;
    } catch (const InvariantError& e) {
        std::cerr << "internal invariant violated: " << e.what() << "\n";
        return kExitInvariantViolation;
    }
    return kExitOk;
}
