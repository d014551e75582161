#pragma once

// The single outer function g, stored as one sorted knot table per branch
// interval [b_q, b_q + 2d], and the two ways of fitting it:
//
//  * fit_exact: minimum-norm interpolation g = M^T (M M^T)^-1 f of the
//    incidence system of a finite sample set, in exact arithmetic;
//  * fit_iterative: damped residual sweeps over a lattice, optionally
//    finished by an exact solve on the lattice.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knet/errors.hpp"
#include "knet/hash.hpp"
#include "knet/inner.hpp"
#include "knet/rational.hpp"
#include "knet/sparse_elimination.hpp"

namespace knet {

struct Knot {
    Rational y;
    Rational g;

    friend bool operator==(const Knot&, const Knot&) = default;
};

// g on the real line: piecewise linear between the knots of a branch,
// clamped to the end knot values of the branch outside them, and clamped to
// the nearest knot overall outside every branch interval.
class OuterFunction {
public:
    OuterFunction() = default;

    OuterFunction(std::vector<Rational> interval_lows, Rational interval_width, std::vector<std::vector<Knot>> branches)
        : lows_(std::move(interval_lows)), width_(std::move(interval_width)), branches_(std::move(branches)) {
        validate();
        build_caches();
    }

    // Empty tables on the branch intervals of `params`.
    static OuterFunction empty_for(const HashParams& params) {
        return OuterFunction(params.b, params.interval_width(),
                             std::vector<std::vector<Knot>>(static_cast<std::size_t>(params.branch_count())));
    }

    std::size_t branch_count() const noexcept { return branches_.size(); }
    const std::vector<Knot>& branch(std::size_t q) const { return branches_.at(q); }
    const std::vector<std::vector<Knot>>& branches() const noexcept { return branches_; }
    const std::vector<Rational>& interval_lows() const noexcept { return lows_; }
    const Rational& interval_width() const noexcept { return width_; }
    std::size_t total_knots() const noexcept { return all_.size(); }
    bool empty() const noexcept { return all_.empty(); }

    // Largest |g_l| over all knots; also the sup of |g| on the real line.
    Rational max_abs_value() const {
        Rational best = 0;
        for (const auto& knot : all_) best = std::max(best, abs_of(knot.g));
        return best;
    }

    Rational eval(const Rational& y) const {
        require_nonempty();
        if (const auto q = branch_of(y); q && !branches_[*q].empty()) {
            return interpolate(branches_[*q], y);
        }
        return nearest(y).g;
    }

    double eval_fast(double y) const {
        require_nonempty();
        for (std::size_t q = 0; q < branches_.size(); ++q) {
            if (y >= fast_lows_[q] && y <= fast_lows_[q] + fast_width_ && !fast_branches_[q].empty()) {
                return interpolate_fast(fast_branches_[q], y);
            }
        }
        auto it = std::lower_bound(fast_all_.begin(), fast_all_.end(), y,
                                   [](const FastKnot& k, double v) { return k.y < v; });
        if (it == fast_all_.begin()) return it->g;
        if (it == fast_all_.end()) return fast_all_.back().g;
        const auto prev = it - 1;
        return (y - prev->y <= it->y - y) ? prev->g : it->g;
    }

    // max |g(t) - g(y)| over t in [y, y + width]. g is piecewise linear, so
    // the extremes sit at the interval end or at knots inside it.
    Rational variation(const Rational& y, const Rational& width) const {
        const Rational base = eval(y);
        const Rational end = y + width;
        Rational best = abs_of(eval(end) - base);
        auto it = std::upper_bound(all_.begin(), all_.end(), y, [](const Rational& v, const Knot& k) { return v < k.y; });
        for (; it != all_.end() && it->y < end; ++it) {
            best = std::max(best, abs_of(eval(it->y) - base));
        }
        return best;
    }

    double variation_fast(double y, double width) const {
        require_nonempty();
        // A window inside one linear piece is slope * width. Computing it that
        // way keeps widths below the resolution of y from collapsing to 0.
        for (std::size_t q = 0; q < fast_branches_.size(); ++q) {
            const auto& knots = fast_branches_[q];
            if (knots.empty() || y < fast_lows_[q] || y + width > fast_lows_[q] + fast_width_) continue;
            auto next = std::upper_bound(knots.begin(), knots.end(), y,
                                         [](double v, const FastKnot& k) { return v < k.y; });
            if (next != knots.end() && next->y < y + width) break;
            if (next == knots.begin() || next == knots.end()) return 0.0;
            const auto prev = next - 1;
            return std::abs((next->g - prev->g) / (next->y - prev->y)) * width;
        }
        const double base = eval_fast(y);
        double best = std::abs(eval_fast(y + width) - base);
        auto it = std::upper_bound(fast_all_.begin(), fast_all_.end(), y,
                                   [](double v, const FastKnot& k) { return v < k.y; });
        for (; it != fast_all_.end() && it->y < y + width; ++it) {
            best = std::max(best, std::abs(eval_fast(it->y) - base));
        }
        return best;
    }

    friend bool operator==(const OuterFunction& lhs, const OuterFunction& rhs) {
        return lhs.lows_ == rhs.lows_ && lhs.width_ == rhs.width_ && lhs.branches_ == rhs.branches_;
    }

private:
    struct FastKnot {
        double y;
        double g;
    };

    void validate() const {
        if (lows_.size() != branches_.size()) {
            throw ParameterError("outer function has " + std::to_string(branches_.size()) + " branches but " +
                                 std::to_string(lows_.size()) + " branch intervals");
        }
        if (width_ < 0) throw ParameterError("branch interval width is negative");
        for (std::size_t q = 0; q < branches_.size(); ++q) {
            if (q > 0 && lows_[q] <= lows_[q - 1] + width_) {
                throw ParameterError("branch intervals " + std::to_string(q - 1) + " and " + std::to_string(q) +
                                     " overlap");
            }
            const auto& knots = branches_[q];
            for (std::size_t l = 0; l < knots.size(); ++l) {
                if (knots[l].y < lows_[q] || knots[l].y > lows_[q] + width_) {
                    throw ParameterError("knot " + std::to_string(l) + " of branch " + std::to_string(q) +
                                         " lies outside its interval");
                }
                if (l > 0 && knots[l].y <= knots[l - 1].y) {
                    throw ParameterError("knots of branch " + std::to_string(q) + " are not strictly increasing at " +
                                         std::to_string(l));
                }
            }
        }
    }

    void build_caches() {
        for (const auto& knots : branches_) {
            all_.insert(all_.end(), knots.begin(), knots.end());
            std::vector<FastKnot> fast;
            fast.reserve(knots.size());
            for (const auto& k : knots) fast.push_back({to_double(k.y), to_double(k.g)});
            fast_all_.insert(fast_all_.end(), fast.begin(), fast.end());
            fast_branches_.push_back(std::move(fast));
        }
        for (const auto& low : lows_) fast_lows_.push_back(to_double(low));
        fast_width_ = to_double(width_);
    }

    void require_nonempty() const {
        if (all_.empty()) throw DomainError("outer function has no knots");
    }

    std::optional<std::size_t> branch_of(const Rational& y) const {
        auto it = std::upper_bound(lows_.begin(), lows_.end(), y, [](const Rational& v, const Rational& low) {
            return v < low;
        });
        if (it == lows_.begin()) return std::nullopt;
        const auto q = static_cast<std::size_t>(it - lows_.begin() - 1);
        if (y > lows_[q] + width_) return std::nullopt;
        return q;
    }

    static Rational interpolate(const std::vector<Knot>& knots, const Rational& y) {
        auto it = std::upper_bound(knots.begin(), knots.end(), y, [](const Rational& v, const Knot& k) { return v < k.y; });
        if (it == knots.begin()) return knots.front().g;
        const auto& left = *(it - 1);
        if (it == knots.end() || left.y == y) return left.g;
        return left.g + (it->g - left.g) * (y - left.y) / (it->y - left.y);
    }

    static double interpolate_fast(const std::vector<FastKnot>& knots, double y) {
        auto it = std::upper_bound(knots.begin(), knots.end(), y, [](double v, const FastKnot& k) { return v < k.y; });
        if (it == knots.begin()) return knots.front().g;
        const auto& left = *(it - 1);
        if (it == knots.end() || left.y == y) return left.g;
        return left.g + (it->g - left.g) * ((y - left.y) / (it->y - left.y));
    }

    const Knot& nearest(const Rational& y) const {
        auto it = std::lower_bound(all_.begin(), all_.end(), y, [](const Knot& k, const Rational& v) { return k.y < v; });
        if (it == all_.begin()) return *it;
        if (it == all_.end()) return all_.back();
        const auto prev = it - 1;
        return (y - prev->y <= it->y - y) ? *prev : *it;
    }

    std::vector<Rational> lows_;
    Rational width_;
    std::vector<std::vector<Knot>> branches_;
    std::vector<Knot> all_;  // branches are disjoint and ordered, so this is sorted
    std::vector<double> fast_lows_;
    double fast_width_ = 0.0;
    std::vector<std::vector<FastKnot>> fast_branches_;
    std::vector<FastKnot> fast_all_;
};

inline Rational g_eval(const OuterFunction& g, const Rational& y) { return g.eval(y); }
inline double g_eval_fast(const OuterFunction& g, double y) { return g.eval_fast(y); }

enum class FunctionClass { continuous, bounded_discontinuous, unbounded };

inline std::string to_string(FunctionClass c) {
    switch (c) {
        case FunctionClass::continuous: return "continuous";
        case FunctionClass::bounded_discontinuous: return "bounded-discontinuous";
        case FunctionClass::unbounded: return "unbounded";
    }
    return "continuous";
}

struct SampleSet {
    std::vector<Point> points;
    std::vector<Rational> targets;
    FunctionClass class_tag = FunctionClass::continuous;

    void validate(int d) const {
        if (points.size() != targets.size()) {
            throw InputError("sample set has " + std::to_string(points.size()) + " points but " +
                             std::to_string(targets.size()) + " targets");
        }
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (points[j].size() != static_cast<std::size_t>(d)) {
                throw InputError("sample " + std::to_string(j) + " has " + std::to_string(points[j].size()) +
                                 " coordinates, expected " + std::to_string(d));
            }
        }
        require_distinct(points);
    }
};

struct FitReport {
    std::string mode;
    int depth = 0;                // depth of the knots in the fitted g
    std::vector<int> depth_attempts;
    Rational residual_max;        // exact sup-norm of the sample/grid residual
    std::size_t knot_count = 0;
    std::size_t samples = 0;
    int iterations = 0;
    std::vector<double> convergence_history;  // grid sup-residual after each round
    Rational initial_residual;
    std::size_t collisions = 0;   // knots hit by more than one (point, branch)
    bool finalized = false;
    SeparationVerdict separation;
};

struct FitResult {
    OuterFunction outer;
    FitReport report;
};

namespace detail {

inline OuterFunction outer_from_values(const HashParams& params, const IncidenceSystem& system,
                                       const std::vector<Rational>& values) {
    std::vector<std::vector<Knot>> branches(static_cast<std::size_t>(params.branch_count()));
    for (std::size_t l = 0; l < system.knots.size(); ++l) {
        branches[static_cast<std::size_t>(system.knot_branch[l])].push_back({system.knots[l], values[l]});
    }
    return OuterFunction(params.b, params.interval_width(), std::move(branches));
}

// max_j |sum_q g(y_{j,q}) - f_j| evaluated through g itself.
inline Rational sample_residual(const OuterFunction& g, const IncidenceSystem& system, std::span<const Rational> f) {
    Rational worst = 0;
    for (std::size_t j = 0; j < system.rows(); ++j) {
        Rational sum = 0;
        for (std::size_t l : system.hits[j]) sum += g.eval(system.knots[l]);
        worst = std::max(worst, abs_of(sum - f[j]));
    }
    return worst;
}

}  // namespace detail

// Minimum-norm exact interpolation of the samples. The separation gate runs
// first (with depth doubling up to depth_cap); a closed path aborts the fit.
inline FitResult fit_exact(const SampleSet& samples, const HashParams& params, const InnerSpec& inner, int depth,
                           int depth_cap = kDefaultDepthCap) {
    samples.validate(params.d);
    CertifiedSystem certified = certify_separation(params, inner, samples.points, depth, depth_cap);
    const IncidenceSystem& system = certified.system;
    if (!certified.verdict.separated) {
        const auto path = certified.verdict.closed_path();
        std::string rows;
        for (std::size_t j : path) rows += (rows.empty() ? "" : ", ") + std::to_string(j);
        throw SeparationFailure("sample points admit a closed path at depth " + std::to_string(system.depth) +
                                    " (rows " + rows + ")",
                                certified.verdict.witness, system.depth);
    }

    // Gram matrix G = M M^T, assembled column by column of M.
    const std::size_t n = system.rows();
    std::vector<std::vector<std::pair<std::size_t, int>>> column_rows(system.cols());
    for (std::size_t j = 0; j < n; ++j) {
        for (const auto& e : system.row(j)) column_rows[e.index].emplace_back(j, e.value.get_num().get_si());
    }
    std::vector<std::vector<std::pair<std::size_t, long>>> gram(n);
    for (const auto& col : column_rows) {
        for (const auto& [i, ci] : col) {
            for (const auto& [j, cj] : col) gram[i].emplace_back(j, static_cast<long>(ci) * cj);
        }
    }

    SparseEliminator eliminator(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = gram[i];
        std::sort(row.begin(), row.end());
        SparseVector entries;
        for (const auto& [j, v] : row) {
            if (!entries.empty() && entries.back().index == j) {
                entries.back().value += v;
            } else {
                entries.push_back({j, Rational(v)});
            }
        }
        if (eliminator.insert(std::move(entries), samples.targets[i], i)) {
            throw InvariantError("Gram matrix singular although the incidence rows are independent");
        }
    }
    const std::vector<Rational> z = eliminator.back_substitute();

    std::vector<Rational> values(system.cols(), Rational(0));
    for (std::size_t l = 0; l < system.cols(); ++l) {
        for (const auto& [j, c] : column_rows[l]) values[l] += c * z[j];
    }

    FitResult result{detail::outer_from_values(params, system, values), {}};
    FitReport& report = result.report;
    report.mode = "exact";
    report.depth = system.depth;
    report.depth_attempts = certified.attempts;
    report.samples = n;
    report.knot_count = system.cols();
    report.separation = certified.verdict;
    report.residual_max = detail::sample_residual(result.outer, system, samples.targets);
    if (report.residual_max != 0) {
        throw InvariantError("exact fit left a nonzero residual " + report.residual_max.get_str());
    }
    return result;
}

// Target function for fit_iterative. Values must be finite; they are taken
// as exact rationals.
using TargetOracle = std::function<Rational(std::span<const Rational>)>;

// Wraps a floating-point function. Each double is converted exactly;
// non-finite values raise InputError.
inline TargetOracle oracle_from_double(std::function<double(std::span<const double>)> f) {
    return [f = std::move(f)](std::span<const Rational> x) {
        std::vector<double> xs;
        xs.reserve(x.size());
        for (const auto& v : x) xs.push_back(to_double(v));
        const double value = f(xs);
        if (!std::isfinite(value)) {
            throw InputError("target is not finite on the grid; fit samples with fit_exact instead");
        }
        return Rational(value);
    };
}

struct IterativeOptions {
    int max_iter = 20;
    Rational tolerance = 0;
    Rational damping = make_rational(1, 2);
    bool finalize = true;
    int depth_cap = kDefaultDepthCap;
};

// Damped residual sweeps on the level-k lattice. Each round spreads
// damping * r(x) / (2d+1) onto the knots Psi_q(x) of every lattice point x
// (averaging where knots collide) and subtracts the network response from the
// residual. With finalize set, the knot values are replaced by an exact fit
// on the lattice afterwards.
inline FitResult fit_iterative(const TargetOracle& f, const HashParams& params, const InnerSpec& inner, int grid_level,
                               int depth, const IterativeOptions& options = {}) {
    if (options.max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (options.damping <= 0 || options.damping > 1) throw DomainError("damping must lie in (0, 1]");

    SampleSet grid;
    grid.points = grid_lattice(grid_level, params.gamma, params.d);
    grid.targets.reserve(grid.points.size());
    for (const auto& x : grid.points) grid.targets.push_back(f(x));

    const IncidenceSystem system = build_incidence(params, inner, grid.points, depth);
    const std::size_t n = system.rows();
    const std::size_t m = system.cols();
    const Rational spread = options.damping / params.branch_count();

    std::vector<std::size_t> knot_hits(m, 0);
    for (const auto& row : system.hits) {
        for (std::size_t l : row) ++knot_hits[l];
    }

    FitReport report;
    report.mode = "iterative";
    report.depth = depth;
    report.depth_attempts = {depth};
    report.samples = n;
    report.knot_count = m;
    report.collisions = static_cast<std::size_t>(std::count_if(knot_hits.begin(), knot_hits.end(),
                                                               [](std::size_t c) { return c > 1; }));

    auto sup_norm = [](const std::vector<Rational>& r) {
        Rational best = 0;
        for (const auto& v : r) best = std::max(best, abs_of(v));
        return best;
    };

    std::vector<Rational> g(m, Rational(0));
    std::vector<Rational> residual = grid.targets;
    Rational previous = sup_norm(residual);
    report.initial_residual = previous;
    const bool enforce_monotone = options.damping <= make_rational(1, 2);

    for (int round = 1; round <= options.max_iter; ++round) {
        std::vector<Rational> delta(m, Rational(0));
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t l : system.hits[j]) delta[l] += residual[j];
        }
        for (std::size_t l = 0; l < m; ++l) {
            delta[l] = delta[l] * spread / static_cast<long>(knot_hits[l]);
            g[l] += delta[l];
        }
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t l : system.hits[j]) residual[j] -= delta[l];
        }
        const Rational current = sup_norm(residual);
        report.iterations = round;
        report.convergence_history.push_back(to_double(current));
        if (enforce_monotone && current > previous) {
            throw InvariantError("damped iteration diverged in round " + std::to_string(round) + ": residual " +
                                 std::to_string(to_double(current)) + " > " + std::to_string(to_double(previous)));
        }
        previous = current;
        if (current <= options.tolerance) break;
    }

    FitResult result{detail::outer_from_values(params, system, g), {}};
    report.residual_max = previous;
    if (options.finalize) {
        FitResult exact = fit_exact(grid, params, inner, depth, options.depth_cap);
        result.outer = std::move(exact.outer);
        report.depth = exact.report.depth;
        report.depth_attempts = exact.report.depth_attempts;
        report.knot_count = exact.report.knot_count;
        report.separation = exact.report.separation;
        report.residual_max = exact.report.residual_max;
        report.finalized = true;
    } else {
        report.separation = separation_check(system);
    }
    result.report = std::move(report);
    return result;
}

struct BranchStats {
    std::size_t q = 0;
    std::size_t knots = 0;
    Rational min_value;
    Rational max_value;
    Rational max_jump;      // largest |g_{l+1} - g_l|
    Rational jump_spacing;  // y_{l+1} - y_l at that jump (smallest spacing among ties)
};

// Table statistics that stand in for the continuity and boundedness classes
// of g at sample scale.
struct ClassReport {
    std::vector<BranchStats> branches;
    std::size_t total_knots = 0;
    Rational max_abs_value;
    Rational max_jump;
    Rational jump_spacing;

    // Smallest knot spacing among adjacent pairs whose jump is at least
    // `threshold`; empty if no pair qualifies.
    std::optional<Rational> spacing_at_jump(const Rational& threshold) const {
        std::optional<Rational> best;
        for (const auto& pair : adjacent_pairs) {
            if (pair.first >= threshold && (!best || pair.second < *best)) best = pair.second;
        }
        return best;
    }

    // (jump, spacing) for every adjacent knot pair, branch by branch.
    std::vector<std::pair<Rational, Rational>> adjacent_pairs;
};

inline ClassReport merge_report(const OuterFunction& g) {
    ClassReport report;
    report.total_knots = g.total_knots();
    report.max_abs_value = g.max_abs_value();
    report.max_jump = 0;
    report.jump_spacing = 0;
    for (std::size_t q = 0; q < g.branch_count(); ++q) {
        const auto& knots = g.branch(q);
        BranchStats stats;
        stats.q = q;
        stats.knots = knots.size();
        stats.max_jump = 0;
        stats.jump_spacing = 0;
        for (std::size_t l = 0; l < knots.size(); ++l) {
            if (l == 0 || knots[l].g < stats.min_value) stats.min_value = knots[l].g;
            if (l == 0 || knots[l].g > stats.max_value) stats.max_value = knots[l].g;
            if (l == 0) continue;
            const Rational jump = abs_of(knots[l].g - knots[l - 1].g);
            const Rational spacing = knots[l].y - knots[l - 1].y;
            report.adjacent_pairs.emplace_back(jump, spacing);
            if (jump > stats.max_jump || (jump == stats.max_jump && spacing < stats.jump_spacing)) {
                stats.max_jump = jump;
                stats.jump_spacing = spacing;
            }
        }
        if (stats.max_jump > report.max_jump ||
            (stats.max_jump == report.max_jump && stats.max_jump > 0 && stats.jump_spacing < report.jump_spacing)) {
            report.max_jump = stats.max_jump;
            report.jump_spacing = stats.jump_spacing;
        }
        report.branches.push_back(std::move(stats));
    }
    return report;
}

}  // namespace knet
