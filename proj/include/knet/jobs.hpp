#pragma once

// Job layer behind the knet command-line tool: CSV ingestion, built-in target
// functions, and the fit / eval / check / bench / describe jobs with their
// JSON reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "knet/errors.hpp"
#include "knet/hash.hpp"
#include "knet/inner.hpp"
#include "knet/network.hpp"
#include "knet/outer.hpp"
#include "knet/rational.hpp"

namespace knet {

inline constexpr int kReportSchemaVersion = 1;

// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 2,
    kExitSeparationFailure = 3,
    kExitInvariantViolation = 4,
};

struct JobConfig {
    int d = 2;
    int gamma = 6;
    int depth = kDefaultDepth;
    int depth_cap = kDefaultDepthCap;
    int grid_level = 1;
    std::string mode = "exact";     // exact | iterative
    std::string numeric = "exact";  // exact | fast
    Rational tolerance = 0;
    int max_iter = 20;
    Rational damping = make_rational(1, 2);
    std::uint64_t seed = 1;
    std::string function;           // built-in target name (iterative mode)
    std::optional<std::vector<Rational>> weights;
    bool timing = true;

    // check
    int probe_level = 2;
    std::size_t samples = 10'000;
    std::size_t trials = 100;
    std::size_t trial_points = 50;

    // bench
    std::vector<std::size_t> sizes{50, 100, 200};
    std::vector<int> depths{kDefaultDepth};
    std::vector<int> grid_levels{1};

    // Rejects inconsistent settings before any computation.
    void validate() const {
        if (d < 2) throw InputError("--d must be at least 2");
        if (gamma < 2 * d + 2) {
            throw InputError("--gamma must satisfy gamma >= 2d+2 = " + std::to_string(2 * d + 2));
        }
        if (depth < 1) throw InputError("--depth must be at least 1");
        if (depth_cap < depth) throw InputError("--depth-cap must be at least --depth");
        if (grid_level < 1) throw InputError("--grid-level must be at least 1");
        if (mode != "exact" && mode != "iterative") throw InputError("--mode must be exact or iterative");
        if (numeric != "exact" && numeric != "fast") throw InputError("--numeric must be exact or fast");
        if (tolerance < 0) throw InputError("--tolerance must be non-negative");
        if (max_iter < 1) throw InputError("--max-iter must be at least 1");
        if (damping <= 0 || damping > 1) throw InputError("--damping must lie in (0, 1]");
        if (probe_level < 1) throw InputError("--grid-level must be at least 1");
        if (samples < 2) throw InputError("--samples must be at least 2");
        if (trial_points < 1) throw InputError("--trial-points must be at least 1");
    }

    InnerSpec inner() const {
        try {
            return weights ? InnerSpec(gamma, *weights) : InnerSpec::default_for(gamma);
        } catch (const ParameterError& e) {
            throw InputError(std::string("inner weights rejected: ") + e.what());
        }
    }

    HashParams params() const {
        try {
            return make_params(d, gamma);
        } catch (const ParameterError& e) {
            throw InputError(e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Rational>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based data row numbers (header excluded)
};

// Header row required. Cells are decimals or "p/q".
inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t row_number = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::blank(line)) continue;
        if (!have_header) {
            table.header = detail::split_csv_line(line);
            have_header = true;
            continue;
        }
        ++row_number;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != table.header.size()) {
            throw InputError("row " + std::to_string(row_number) + ": expected " + std::to_string(table.header.size()) +
                             " columns, found " + std::to_string(cells.size()));
        }
        std::vector<Rational> values;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                values.push_back(parse_rational(cells[c]));
            } catch (const DomainError& e) {
                throw InputError("row " + std::to_string(row_number) + ", column " + std::to_string(c + 1) + ": " +
                                 e.what());
            }
        }
        table.rows.push_back(std::move(values));
        table.line_numbers.push_back(row_number);
    }
    if (!have_header) throw InputError("CSV input is empty; a header row is required");
    return table;
}

namespace detail {

inline void check_unit_cube(const Point& x, std::size_t row) {
    for (std::size_t p = 0; p < x.size(); ++p) {
        if (x[p] < 0 || x[p] > 1) {
            throw InputError("row " + std::to_string(row) + ": coordinate " + std::to_string(p + 1) + " = " +
                             x[p].get_str() + " outside [0, 1]");
        }
    }
}

}  // namespace detail

// d coordinate columns followed by one target column.
inline SampleSet samples_from_csv(const CsvTable& table, int d) {
    if (table.header.size() != static_cast<std::size_t>(d) + 1) {
        throw InputError("sample CSV needs " + std::to_string(d + 1) + " columns (d coordinates and a target), found " +
                         std::to_string(table.header.size()));
    }
    SampleSet samples;
    std::map<Point, std::size_t> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        Point x(table.rows[i].begin(), table.rows[i].begin() + d);
        detail::check_unit_cube(x, table.line_numbers[i]);
        if (auto [it, inserted] = seen.emplace(x, table.line_numbers[i]); !inserted) {
            throw InputError("rows " + std::to_string(it->second) + " and " + std::to_string(table.line_numbers[i]) +
                             " contain the same point");
        }
        samples.points.push_back(std::move(x));
        samples.targets.push_back(table.rows[i].back());
    }
    return samples;
}

// d coordinate columns; an extra target column is allowed and returned.
inline std::pair<std::vector<Point>, std::vector<Rational>> points_from_csv(const CsvTable& table, int d) {
    const std::size_t cols = table.header.size();
    if (cols != static_cast<std::size_t>(d) && cols != static_cast<std::size_t>(d) + 1) {
        throw InputError("points CSV needs " + std::to_string(d) + " coordinate columns (optionally a target), found " +
                         std::to_string(cols));
    }
    std::pair<std::vector<Point>, std::vector<Rational>> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        Point x(table.rows[i].begin(), table.rows[i].begin() + d);
        detail::check_unit_cube(x, table.line_numbers[i]);
        out.first.push_back(std::move(x));
        if (cols == static_cast<std::size_t>(d) + 1) out.second.push_back(table.rows[i].back());
    }
    return out;
}

inline std::string samples_to_csv(const SampleSet& samples) {
    std::string out;
    const std::size_t d = samples.points.empty() ? 0 : samples.points.front().size();
    for (std::size_t p = 0; p < d; ++p) out += "x" + std::to_string(p + 1) + ",";
    out += "f\n";
    for (std::size_t j = 0; j < samples.points.size(); ++j) {
        for (const auto& v : samples.points[j]) out += to_fraction_string(v) + ",";
        out += to_fraction_string(samples.targets[j]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Targets and sample generation

// Built-in targets: product, sum, indicator (x1 < 1/2), inverse
// (1/(x1+...+xd + 1/1000)), zero, one.
inline TargetOracle builtin_target(const std::string& name) {
    if (name == "product") {
        return [](std::span<const Rational> x) {
            Rational v = 1;
            for (const auto& c : x) v *= c;
            return v;
        };
    }
    if (name == "sum") {
        return [](std::span<const Rational> x) {
            Rational v = 0;
            for (const auto& c : x) v += c;
            return v;
        };
    }
    if (name == "indicator") {
        return [](std::span<const Rational> x) { return Rational(x[0] < make_rational(1, 2) ? 1 : 0); };
    }
    if (name == "inverse") {
        return [](std::span<const Rational> x) {
            Rational s = make_rational(1, 1000);
            for (const auto& c : x) s += c;
            return Rational(1 / s);
        };
    }
    if (name == "zero") {
        return [](std::span<const Rational>) { return Rational(0); };
    }
    if (name == "one") {
        return [](std::span<const Rational>) { return Rational(1); };
    }
    throw InputError("unknown target function '" + name + "' (expected product, sum, indicator, inverse, zero, one)");
}

inline FunctionClass builtin_class(const std::string& name) {
    if (name == "indicator") return FunctionClass::bounded_discontinuous;
    if (name == "inverse") return FunctionClass::unbounded;
    return FunctionClass::continuous;
}

// n distinct uniform points in [0,1]^d on the 10^-6 lattice.
inline std::vector<Point> random_points(std::size_t n, int d, std::mt19937_64& rng) {
    std::uniform_int_distribution<unsigned long> dist(0, 1'000'000UL);
    std::set<Point> seen;
    std::vector<Point> out;
    out.reserve(n);
    while (out.size() < n) {
        Point x;
        for (int p = 0; p < d; ++p) x.push_back(make_rational(Integer(dist(rng)), Integer(1'000'000UL)));
        if (seen.insert(x).second) out.push_back(std::move(x));
    }
    return out;
}

inline SampleSet make_samples(std::size_t n, int d, const std::string& target, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SampleSet samples;
    samples.points = random_points(n, d, rng);
    const TargetOracle f = builtin_target(target);
    for (const auto& x : samples.points) samples.targets.push_back(f(x));
    samples.class_tag = builtin_class(target);
    return samples;
}

// FNV-1a over the canonical "p/q" text of the samples.
inline std::string sample_hash(const SampleSet& samples) {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    for (std::size_t j = 0; j < samples.points.size(); ++j) {
        for (const auto& v : samples.points[j]) mix(to_fraction_string(v));
        mix(to_fraction_string(samples.targets[j]));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

// ---------------------------------------------------------------------------
// Report helpers

inline Json exact_number(const Rational& v) {
    return Json{{"mode", "exact"}, {"value", to_fraction_string(v)}, {"approx", to_double(v)}};
}

inline Json fast_number(double v) { return Json{{"mode", "fast"}, {"value", v}}; }

inline Json verdict_to_json(const SeparationVerdict& verdict) {
    Json out{{"separated", verdict.separated}, {"rank", verdict.rank}, {"rows", verdict.rows}};
    if (!verdict.separated) {
        Json mu = Json::array();
        Json path = Json::array();
        for (std::size_t j = 0; j < verdict.witness.size(); ++j) {
            if (verdict.witness[j] == 0) continue;
            mu.push_back(verdict.witness[j].get_str());
            path.push_back(j);
        }
        out["closed_path_rows"] = std::move(path);
        out["mu"] = std::move(mu);
    }
    return out;
}

inline Json fit_report_to_json(const FitReport& report) {
    Json out;
    out["mode"] = report.mode;
    out["depth"] = report.depth;
    out["depth_attempts"] = report.depth_attempts;
    out["samples"] = report.samples;
    out["knot_count"] = report.knot_count;
    out["residual_max"] = exact_number(report.residual_max);
    if (report.mode == "iterative") {
        out["iterations"] = report.iterations;
        out["initial_residual"] = exact_number(report.initial_residual);
        Json history = Json::array();
        for (double h : report.convergence_history) history.push_back(fast_number(h));
        out["convergence_history"] = std::move(history);
        out["collisions"] = report.collisions;
        out["finalized"] = report.finalized;
    }
    out["separation"] = verdict_to_json(report.separation);
    return out;
}

inline Json class_report_to_json(const ClassReport& report) {
    Json out;
    out["total_knots"] = report.total_knots;
    out["max_abs_value"] = exact_number(report.max_abs_value);
    out["max_jump"] = exact_number(report.max_jump);
    out["jump_spacing"] = exact_number(report.jump_spacing);
    Json branches = Json::array();
    for (const auto& b : report.branches) {
        Json entry{{"q", b.q}, {"knots", b.knots}};
        if (b.knots > 0) {
            entry["min_value"] = exact_number(b.min_value);
            entry["max_value"] = exact_number(b.max_value);
            entry["max_jump"] = exact_number(b.max_jump);
            entry["jump_spacing"] = exact_number(b.jump_spacing);
        }
        branches.push_back(std::move(entry));
    }
    out["branches"] = std::move(branches);
    return out;
}

inline Json range_report_to_json(const RangeReport& report) {
    Json out{{"passed", report.passed()},
             {"level", report.level},
             {"depth", report.depth},
             {"points_checked", report.points_checked},
             {"violations", report.violations},
             {"min_gap", exact_number(report.min_gap)}};
    Json branches = Json::array();
    for (std::size_t q = 0; q < report.branch_min.size(); ++q) {
        branches.push_back(Json{{"q", q},
                                {"min", exact_number(report.branch_min[q])},
                                {"max_with_error", exact_number(report.branch_max[q])}});
    }
    out["branches"] = std::move(branches);
    if (!report.witness.empty()) out["witness"] = report.witness;
    return out;
}

inline Json property_report_to_json(const PropertyReport& report) {
    Json out{{"passed", report.passed()}, {"holder_constant", fast_number(report.holder_constant)}};
    Json checks = Json::array();
    for (const auto& c : report.checks) {
        Json entry{{"name", c.name}, {"passed", c.passed}, {"trials", c.trials}, {"violations", c.violations}};
        if (c.name == "holder") entry["measured_constant"] = fast_number(c.measured);
        if (!c.witness.empty()) entry["witness"] = c.witness;
        checks.push_back(std::move(entry));
    }
    out["checks"] = std::move(checks);
    return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

inline Json report_header(const std::string& command, const JobConfig& config) {
    Json out;
    out["schema_version"] = kReportSchemaVersion;
    out["command"] = command;
    out["config"] = Json{{"d", config.d},
                         {"gamma", config.gamma},
                         {"depth", config.depth},
                         {"depth_cap", config.depth_cap},
                         {"mode", config.mode},
                         {"numeric", config.numeric},
                         {"seed", config.seed}};
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Jobs

struct FitJobResult {
    std::optional<KNetModel> model;
    Json report;
    int exit_code = kExitOk;
};

// Iterative mode pulls its lattice targets from `samples` (which must contain
// every lattice point) unless config.function names a built-in target.
inline FitJobResult fit_job(const JobConfig& config, const SampleSet& samples) {
    config.validate();
    const InnerSpec inner = config.inner();
    const HashParams params = config.params();
    const auto start = detail::Clock::now();

    FitJobResult out;
    out.report = detail::report_header("fit", config);
    FitResult fit;
    SampleSet fitted;
    try {
        if (config.mode == "exact") {
            fitted = samples;
            fit = fit_exact(samples, params, inner, config.depth, config.depth_cap);
        } else {
            TargetOracle oracle;
            if (!config.function.empty()) {
                oracle = builtin_target(config.function);
            } else {
                auto table = std::make_shared<std::map<Point, Rational>>();
                for (std::size_t j = 0; j < samples.points.size(); ++j) table->emplace(samples.points[j], samples.targets[j]);
                oracle = [table](std::span<const Rational> x) {
                    auto it = table->find(Point(x.begin(), x.end()));
                    if (it == table->end()) {
                        std::string where;
                        for (const auto& v : x) where += (where.empty() ? "" : ", ") + v.get_str();
                        throw InputError("iterative fit needs a target at lattice point (" + where +
                                         "); supply it in the CSV or pass --function");
                    }
                    return it->second;
                };
            }
            IterativeOptions options;
            options.max_iter = config.max_iter;
            options.tolerance = config.tolerance;
            options.damping = config.damping;
            options.depth_cap = config.depth_cap;
            fit = fit_iterative(oracle, params, inner, config.grid_level, config.depth, options);
            fitted.points = grid_lattice(config.grid_level, params.gamma, params.d);
            for (const auto& x : fitted.points) fitted.targets.push_back(oracle(x));
        }
    } catch (const SeparationFailure& e) {
        Json failure{{"message", e.what()}, {"depth", e.depth()}};
        Json mu = Json::array();
        Json rows = Json::array();
        for (std::size_t j = 0; j < e.witness().size(); ++j) {
            if (e.witness()[j] == 0) continue;
            rows.push_back(j);
            mu.push_back(e.witness()[j].get_str());
        }
        failure["closed_path_rows"] = std::move(rows);
        failure["mu"] = std::move(mu);
        out.report["separation_failure"] = std::move(failure);
        out.exit_code = kExitSeparationFailure;
        return out;
    }

    ModelMeta meta;
    meta.fit_mode = config.mode;
    meta.depth = fit.report.depth;
    meta.sample_hash = sample_hash(fitted);
    KNetModel model = assemble(inner, params, fit.outer, meta);

    out.report["fit"] = fit_report_to_json(fit.report);
    out.report["class_report"] = class_report_to_json(merge_report(model.outer()));
    if (config.numeric == "fast") {
        const auto fast = eval_batch_fast(model, fitted.points, meta.depth);
        double worst = 0.0;
        for (std::size_t j = 0; j < fast.size(); ++j) {
            worst = std::max(worst, std::abs(fast[j].w - to_double(fitted.targets[j])));
        }
        out.report["fast_residual_max"] = fast_number(worst);
    }
    if (config.timing) out.report["timing_ms"] = detail::elapsed_ms(start);
    out.model = std::move(model);
    return out;
}

struct EvalJobResult {
    std::string csv;
    Json report;
};

inline EvalJobResult eval_job(const JobConfig& config, const KNetModel& model, const CsvTable& points_table) {
    if (config.numeric != "exact" && config.numeric != "fast") throw InputError("--numeric must be exact or fast");
    const auto [points, targets] = points_from_csv(points_table, model.d());
    const int depth = model.meta().depth;
    EvalJobResult out;
    out.report = Json{{"schema_version", kReportSchemaVersion}, {"command", "eval"}, {"numeric", config.numeric},
                      {"rows", points.size()}, {"depth", depth}};
    out.csv = "w,error_bound\n";
    if (config.numeric == "exact") {
        Rational worst = 0;
        const auto results = eval_batch(model, points, depth);
        for (std::size_t i = 0; i < results.size(); ++i) {
            out.csv += to_fraction_string(results[i].w) + "," + to_fraction_string(results[i].error_bound) + "\n";
            if (!targets.empty()) worst = std::max(worst, abs_of(results[i].w - targets[i]));
        }
        if (!targets.empty()) out.report["residual_max"] = exact_number(worst);
    } else {
        double worst = 0.0;
        const auto results = eval_batch_fast(model, points, depth);
        char buf[64];
        for (std::size_t i = 0; i < results.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", results[i].w, results[i].error_bound);
            out.csv += buf;
            if (!targets.empty()) worst = std::max(worst, std::abs(results[i].w - to_double(targets[i])));
        }
        if (!targets.empty()) out.report["residual_max"] = fast_number(worst);
    }
    return out;
}

// verify_inner, check_ranges, and randomized separation trials.
inline Json check_job(const JobConfig& config) {
    config.validate();
    const InnerSpec inner = config.inner();
    const HashParams params = config.params();
    const auto start = detail::Clock::now();
    Json report = detail::report_header("check", config);

    const PropertyReport inner_report = verify_inner(inner, config.samples, config.depth, config.seed);
    report["inner"] = property_report_to_json(inner_report);

    const RangeReport ranges = check_ranges(params, inner, config.probe_level, config.depth);
    report["ranges"] = range_report_to_json(ranges);

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::size_t failures = 0;
    Json failed = Json::array();
    std::vector<int> depths_used;
    for (std::size_t t = 0; t < config.trials; ++t) {
        const std::vector<Point> points = random_points(config.trial_points, config.d, rng);
        const CertifiedSystem certified = certify_separation(params, inner, points, config.depth, config.depth_cap);
        depths_used.push_back(certified.system.depth);
        if (!certified.verdict.separated) {
            ++failures;
            Json entry = verdict_to_json(certified.verdict);
            entry["trial"] = t;
            failed.push_back(std::move(entry));
        }
    }
    report["separation"] = Json{{"trials", config.trials},
                                {"points_per_trial", config.trial_points},
                                {"failures", failures},
                                {"depths_used", depths_used},
                                {"failed_trials", std::move(failed)}};
    report["passed"] = inner_report.passed() && ranges.passed() && failures == 0;
    if (config.timing) report["timing_ms"] = detail::elapsed_ms(start);
    return report;
}

struct BenchJobResult {
    std::string csv;
    Json report;
};

// Sweeps exact fits over config.sizes x config.depths and iterative fits
// over config.grid_levels on the built-in target (default product).
inline BenchJobResult bench_job(const JobConfig& config) {
    config.validate();
    const InnerSpec inner = config.inner();
    const HashParams params = config.params();
    const std::string target = config.function.empty() ? "product" : config.function;

    BenchJobResult out;
    out.report = detail::report_header("bench", config);
    out.csv = "kind,n,depth,grid_level,knots,fit_ms,iterations,convergence_factor,separation_depth,residual_max\n";
    Json rows = Json::array();
    char buf[256];
    for (int depth : config.depths) {
        for (std::size_t n : config.sizes) {
            const SampleSet samples = make_samples(n, config.d, target, config.seed);
            const auto start = detail::Clock::now();
            const FitResult fit = fit_exact(samples, params, inner, depth, config.depth_cap);
            const double ms = detail::elapsed_ms(start);
            std::snprintf(buf, sizeof buf, "exact,%zu,%d,,%zu,%.3f,,,%d,%.17g\n", n, depth, fit.report.knot_count, ms,
                          fit.report.depth, to_double(fit.report.residual_max));
            out.csv += buf;
            rows.push_back(Json{{"kind", "exact"}, {"n", n}, {"depth", depth}, {"knots", fit.report.knot_count},
                                {"fit_ms", ms}, {"separation_depth", fit.report.depth}});
        }
    }
    for (int level : config.grid_levels) {
        IterativeOptions options;
        options.max_iter = config.max_iter;
        options.tolerance = config.tolerance;
        options.damping = config.damping;
        options.depth_cap = config.depth_cap;
        const auto start = detail::Clock::now();
        const FitResult fit = fit_iterative(builtin_target(target), params, inner, level, config.depth, options);
        const double ms = detail::elapsed_ms(start);
        // Geometric mean of successive residual ratios.
        double factor = 0.0;
        const auto& h = fit.report.convergence_history;
        const double first = to_double(fit.report.initial_residual);
        if (!h.empty() && first > 0.0 && h.back() > 0.0) {
            factor = std::pow(h.back() / first, 1.0 / static_cast<double>(h.size()));
        }
        std::snprintf(buf, sizeof buf, "iterative,%zu,%d,%d,%zu,%.3f,%d,%.17g,%d,%.17g\n", fit.report.samples,
                      config.depth, level, fit.report.knot_count, ms, fit.report.iterations, factor, fit.report.depth,
                      to_double(fit.report.residual_max));
        out.csv += buf;
        rows.push_back(Json{{"kind", "iterative"}, {"n", fit.report.samples}, {"grid_level", level},
                            {"knots", fit.report.knot_count}, {"fit_ms", ms}, {"iterations", fit.report.iterations},
                            {"convergence_factor", factor}});
    }
    out.report["rows"] = std::move(rows);
    return out;
}

}  // namespace knet
