// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. All tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "knet/jobs.hpp"

using namespace knet;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr double kFastResidualTol = 1e-9;
constexpr double kRuntimeLimitSeconds = 60.0;
constexpr int kDepth = 30;

struct Outcome {
    bool passed = true;
    std::string detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            passed = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome outcome;
    try {
        outcome = body();
    } catch (const std::exception& e) {
        outcome.passed = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    if (!outcome.passed) ++failures;
    std::printf("[%s] AC%-2d %s%s%s\n", outcome.passed ? "PASS" : "FAIL", id, title.c_str(),
                outcome.detail.empty() ? "" : " :: ", outcome.detail.c_str());
    std::fflush(stdout);
}

JobConfig base_config() {
    JobConfig config;
    config.d = 2;
    config.gamma = 6;
    config.depth = kDepth;
    config.seed = kSeed;
    config.timing = false;
    return config;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Exact residual recomputed through the public eval path.
Rational exact_residual(const KNetModel& model, const SampleSet& samples) {
    Rational worst = 0;
    const auto results = eval_batch(model, samples.points, model.meta().depth);
    for (std::size_t j = 0; j < results.size(); ++j) worst = std::max(worst, abs_of(results[j].w - samples.targets[j]));
    return worst;
}

double fast_residual(const KNetModel& model, const SampleSet& samples) {
    double worst = 0.0;
    const auto results = eval_batch_fast(model, samples.points, model.meta().depth);
    for (std::size_t j = 0; j < results.size(); ++j) {
        worst = std::max(worst, std::abs(results[j].w - to_double(samples.targets[j])));
    }
    return worst;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Outcome criterion1() {
    Outcome out;
    const SampleSet samples = make_samples(300, 2, "product", kSeed);
    const auto start = std::chrono::steady_clock::now();
    JobConfig config = base_config();
    config.numeric = "fast";
    const FitJobResult fit = fit_job(config, samples);
    const double seconds = seconds_since(start);
    out.require(fit.exit_code == kExitOk && fit.model.has_value(), "fit failed");
    if (!fit.model) return out;
    const Rational exact = exact_residual(*fit.model, samples);
    const double fast = fast_residual(*fit.model, samples);
    out.require(exact == 0, "rational residual " + exact.get_str());
    out.require(fit.report["fit"]["residual_max"]["value"] == "0/1", "reported residual nonzero");
    out.require(fast <= kFastResidualTol, "fast residual " + fmt(fast));
    out.require(seconds <= kRuntimeLimitSeconds, "runtime " + fmt(seconds) + " s");
    out.detail += (out.detail.empty() ? "" : "; ") + std::string("fast residual ") + fmt(fast) + ", fit " +
                  fmt(seconds) + " s";
    return out;
}

Outcome criterion2() {
    Outcome out;
    const Rational threshold = make_rational(1, 5) - make_rational(1, 1000000);
    std::optional<Rational> previous_spacing;
    std::string summary;
    for (std::size_t n : {100u, 300u, 1000u}) {
        const SampleSet samples = make_samples(n, 2, "indicator", kSeed);
        const FitJobResult fit = fit_job(base_config(), samples);
        out.require(fit.model.has_value(), "fit failed at n=" + std::to_string(n));
        if (!fit.model) return out;
        const Rational residual = exact_residual(*fit.model, samples);
        out.require(residual == 0, "residual " + residual.get_str() + " at n=" + std::to_string(n));
        const ClassReport stats = merge_report(fit.model->outer());
        out.require(stats.max_jump >= threshold,
                    "max jump " + fmt(to_double(stats.max_jump)) + " < 1/5 at n=" + std::to_string(n));
        // The same jump size persists while the knots it spans move closer.
        const auto spacing = stats.spacing_at_jump(threshold);
        out.require(spacing.has_value(), "no jump >= 1/5 at n=" + std::to_string(n));
        if (spacing && previous_spacing) {
            out.require(*spacing < *previous_spacing, "jump spacing did not shrink at n=" + std::to_string(n));
        }
        previous_spacing = spacing;
        summary += " n=" + std::to_string(n) + ": jump " + fmt(to_double(stats.max_jump)) + " at spacing " +
                   (spacing ? fmt(to_double(*spacing)) : std::string("-"));
    }
    if (out.passed) out.detail = summary.substr(1);
    return out;
}

Outcome criterion3() {
    Outcome out;
    const SampleSet samples = make_samples(300, 2, "inverse", kSeed);
    const FitJobResult fit = fit_job(base_config(), samples);
    out.require(fit.model.has_value(), "fit failed");
    if (!fit.model) return out;
    const Rational residual = exact_residual(*fit.model, samples);
    out.require(residual == 0, "residual " + residual.get_str());
    Rational max_f = 0;
    for (const auto& f : samples.targets) max_f = std::max(max_f, abs_of(f));
    const ClassReport stats = merge_report(fit.model->outer());
    out.require(stats.max_abs_value >= max_f / 5, "max |g| " + fmt(to_double(stats.max_abs_value)) + " < max|f|/5");
    if (out.passed) {
        out.detail = "max|f| " + fmt(to_double(max_f)) + ", max|g| " + fmt(to_double(stats.max_abs_value));
    }
    return out;
}

Outcome criterion4() {
    Outcome out;
    const JobConfig config = base_config();
    const HashParams params = config.params();
    const InnerSpec inner = config.inner();
    std::mt19937_64 rng(kSeed);
    std::size_t separated = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<Point> points = random_points(50, 2, rng);
        const SeparationVerdict v = separation_check(build_incidence(params, inner, points, kDepth));
        if (v.separated && v.rank == 50) ++separated;
    }
    out.require(separated == 100, std::to_string(100 - separated) + " trials not separated");

    // Duplicated row: append a copy of row 0 to a certified system.
    const std::vector<Point> points = random_points(50, 2, rng);
    IncidenceSystem system = build_incidence(params, inner, points, kDepth);
    system.points.push_back(system.points[0]);
    system.hits.push_back(system.hits[0]);
    const SeparationVerdict dup = separation_check(system);
    std::vector<Integer> expected(51, Integer(0));
    expected[0] = 1;
    expected[50] = -1;
    out.require(!dup.separated && dup.witness == expected, "duplicated row witness is not (1, -1)");

    // Two points that only differ beyond the evaluation depth.
    const Rational eps = make_rational(Integer(1), pow_int(6, 40));
    const std::vector<Point> twins{points[3], {points[3][0] + eps, points[3][1] + eps}};
    const SeparationVerdict twin = separation_check(build_incidence(params, inner, twins, kDepth));
    out.require(!twin.separated && twin.witness == std::vector<Integer>{1, -1}, "twin points witness is not (1, -1)");
    if (out.passed) out.detail = "100/100 trials separated; duplicate witness (1, -1)";
    return out;
}

Outcome criterion5() {
    Outcome out;
    const JobConfig config = base_config();
    const HashParams params = config.params();
    const RangeReport ranges = check_ranges(params, config.inner(), 2, kDepth);
    out.require(ranges.violations == 0, std::to_string(ranges.violations) + " violations, first " + ranges.witness);
    out.require(ranges.min_gap >= 1, "gap " + fmt(to_double(ranges.min_gap)));
    for (std::size_t q = 0; q < 5; ++q) {
        out.require(ranges.branch_min[q] >= Rational(5 * static_cast<long>(q)) &&
                        ranges.branch_max[q] <= Rational(5 * static_cast<long>(q) + 4),
                    "branch " + std::to_string(q) + " leaves [5q, 5q+4]");
    }
    out.require(ranges.points_checked == 37u * 37u, "lattice size");
    if (out.passed) {
        out.detail = std::to_string(ranges.points_checked) + " points, min gap " + fmt(to_double(ranges.min_gap));
    }
    return out;
}

Outcome criterion6() {
    Outcome out;
    const PropertyReport report = verify_inner(InnerSpec::default_for(6), 10000, kDepth, kSeed);
    for (const char* name : {"monotonicity", "holder", "shift_identity", "unit_range"}) {
        const PropertyCheck* check = report.find(name);
        out.require(check != nullptr, std::string("missing check ") + name);
        if (!check) continue;
        out.require(check->violations == 0 && check->passed,
                    std::string(name) + ": " + std::to_string(check->violations) + " violations " + check->witness);
    }
    const PropertyCheck* mono = report.find("monotonicity");
    const PropertyCheck* holder = report.find("holder");
    const PropertyCheck* shift = report.find("shift_identity");
    // n sorted points give n - 1 adjacent comparisons
    out.require(mono && mono->trials + 1 >= 10000, "fewer than 10^4 monotonicity samples");
    out.require(holder && holder->trials >= 10000, "fewer than 10^4 Hoelder pairs");
    out.require(shift && shift->trials >= 1000, "fewer than 10^3 shift checks");
    out.require(report.holder_constant <= 4.0, "Hoelder constant " + fmt(report.holder_constant));
    if (out.passed) out.detail = "largest Hoelder ratio " + fmt(report.holder_constant);
    return out;
}

Outcome criterion7() {
    Outcome out;
    const HashParams params = make_params(2, 6);
    out.require(params.lambda[0] == 1 && params.lambda_tail[0] == 0, "lambda_1 is not exactly 1");
    // Independent oracle: sum 6^-(2^r - 1) over enough terms that the
    // neglected part is far below 10^-30.
    Rational oracle = 0;
    for (int r = 1; r <= 7; ++r) {
        oracle += make_rational(Integer(1), pow_int(6, (1UL << r) - 1));
    }
    const Rational tol = make_rational(Integer(1), pow_int(10, 18));
    const Rational diff = abs_of(oracle - params.lambda[1]);
    out.require(diff <= tol, "lambda_2 off by " + fmt(to_double(diff)));
    out.require(diff <= params.lambda_tail[1], "tail bound does not cover the oracle difference");
    out.require(params.lambda_tail[1] <= tol, "declared tail bound above 1e-18");
    const std::vector<long> expected{1, 3, 7, 15, 31};
    for (int r = 1; r <= 5; ++r) {
        out.require(lambda_exponent(2, 2, r) == expected[static_cast<std::size_t>(r - 1)],
                    "exponent e_" + std::to_string(r));
    }
    if (out.passed) {
        out.detail = "lambda_2 = " + to_fraction_string(params.lambda[1]) + ", |oracle diff| " + fmt(to_double(diff));
    }
    return out;
}

Outcome criterion8() {
    Outcome out;
    const JobConfig config = base_config();
    const HashParams params = config.params();
    const InnerSpec inner = config.inner();
    const TargetOracle f = builtin_target("sum");
    IterativeOptions options;
    options.damping = make_rational(1, 2);
    options.max_iter = 20;
    const FitResult fit = fit_iterative(f, params, inner, 1, kDepth, options);
    const auto& h = fit.report.convergence_history;
    out.require(!h.empty(), "empty history");
    for (std::size_t i = 1; i < h.size(); ++i) {
        out.require(h[i] <= h[i - 1], "history increases at round " + std::to_string(i + 1));
    }
    out.require(fit.report.finalized && fit.report.residual_max == 0, "finalized residual nonzero");
    // Independent recheck on the lattice.
    Rational worst = 0;
    for (const Point& x : grid_lattice(1, 6, 2)) {
        Rational w = 0;
        for (int q = 0; q < params.branch_count(); ++q) w += fit.outer.eval(psi_eval(params, inner, x, q, fit.report.depth).value);
        worst = std::max(worst, abs_of(w - f(x)));
    }
    out.require(worst == 0, "lattice residual " + worst.get_str());
    if (out.passed && !h.empty()) {
        out.detail = std::to_string(h.size()) + " rounds, residual " + fmt(to_double(fit.report.initial_residual)) +
                     " -> " + fmt(h.back()) + ", finalized to 0";
    }
    return out;
}

Outcome criterion9() {
    Outcome out;
    const SampleSet samples = make_samples(100, 2, "product", kSeed);
    const FitJobResult fit = fit_job(base_config(), samples);
    if (!fit.model) {
        out.require(false, "fit failed");
        return out;
    }
    const KNetModel& model = *fit.model;
    const KNetModel loaded = load(save(model));
    std::mt19937_64 rng(kSeed + 9);
    std::uniform_int_distribution<long> num(0, 999983);
    for (int i = 0; i < 100; ++i) {
        const Point x{make_rational(num(rng), 999983), make_rational(num(rng), 999983)};
        const EvalResult a = eval(model, x);
        const EvalResult b = eval(loaded, x);
        const FastEvalResult fa = eval_fast(model, x);
        const FastEvalResult fb = eval_fast(loaded, x);
        if (a.w != b.w || a.error_bound != b.error_bound || fa.w != fb.w || fa.error_bound != fb.error_bound) {
            out.require(false, "evaluation differs at point " + std::to_string(i));
            break;
        }
    }
    out.require(save(loaded) == save(model), "re-saved file differs");

    const std::string text = save(model);
    Json future = Json::parse(text);
    future["format_version"] = 2;
    Json wrong_type = Json::parse(text);
    wrong_type["branches"][0]["knots"][0]["g"] = 0.5;
    const std::vector<std::pair<std::string, std::string>> malformed{
        {text.substr(0, text.size() / 3), "byte "},
        {future.dump(), "/format_version"},
        {wrong_type.dump(), "/branches/0/knots/0/g"},
    };
    for (const auto& [doc, location] : malformed) {
        try {
            load(doc);
            out.require(false, "accepted a malformed file (" + location + ")");
        } catch (const ParseError& e) {
            out.require(e.location().rfind(location, 0) == 0, "location '" + e.location() + "' != " + location);
        }
    }
    if (out.passed) out.detail = "100/100 points bit-identical; 3 malformed files rejected";
    return out;
}

Outcome criterion10() {
    Outcome out;
    const SampleSet samples = make_samples(200, 2, "product", kSeed);
    const FitJobResult a = fit_job(base_config(), samples);
    const FitJobResult b = fit_job(base_config(), make_samples(200, 2, "product", kSeed));
    out.require(a.model && b.model, "fit failed");
    if (!a.model || !b.model) return out;
    out.require(save(*a.model) == save(*b.model), "model files differ");
    out.require(a.report.dump() == b.report.dump(), "reports differ");
    if (out.passed) out.detail = std::to_string(save(*a.model).size()) + " bytes, identical";
    return out;
}

}  // namespace

int main() {
    report(1, "exact fit, product, n=300", criterion1);
    report(2, "exact fit, indicator, jump statistic under refinement", criterion2);
    report(3, "exact fit, 1/(x1+x2+1e-3), knot magnitude", criterion3);
    report(4, "separation trials and closed-path witness", criterion4);
    report(5, "branch ranges and gaps on the level-2 lattice", criterion5);
    report(6, "inner function properties", criterion6);
    report(7, "lambda constants", criterion7);
    report(8, "iterative fit convergence and finalization", criterion8);
    report(9, "serialization round trip and malformed files", criterion9);
    report(10, "deterministic model files", criterion10);
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
