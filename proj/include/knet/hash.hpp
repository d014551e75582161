#pragma once

// Network constants and the branch maps
//
//     Psi_q(x) = sum_p lambda_p * phi(x_p + a*q) + b_q,   q = 0..2d,
//
// plus the incidence system of a finite point set and the exact test for
// closed paths (a nonzero mu with sum_j mu_j * [Psi_q(x_j) = y] = 0 for all
// knots y).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "knet/errors.hpp"
#include "knet/inner.hpp"
#include "knet/rational.hpp"
#include "knet/sparse_elimination.hpp"

namespace knet {

using Point = std::vector<Rational>;

// 10^-18
inline Rational default_series_tolerance() { return make_rational(Integer(1), pow_int(10, 18)); }

struct LambdaValue {
    Rational value;
    Rational tail_bound;
    int terms = 0;
};

// Exponent (p-1)(d^r - 1)/(d - 1) of the r-th series term of lambda_p.
inline Integer lambda_exponent(int p, int d, int r) {
    return Integer(p - 1) * ((pow_int(d, static_cast<unsigned long>(r)) - 1) / (d - 1));
}

// Partial sum of lambda_p = sum_{r>=1} gamma^-(p-1)(d^r-1)/(d-1). The
// exponents are strictly increasing integers, so the tail after R terms is at
// most gamma^-e_{R+1} * gamma/(gamma-1); summation stops once that bound is
// within `tolerance`.
inline LambdaValue lambda_series(int p, int d, int gamma, const Rational& tolerance) {
    if (d < 2 || p < 1 || p > d) {
        throw ParameterError("lambda_p needs 1 <= p <= d and d >= 2");
    }
    if (gamma < 2) {
        throw ParameterError("lambda_p needs gamma >= 2");
    }
    if (tolerance <= 0) {
        throw ParameterError("series tolerance must be positive");
    }
    if (p == 1) {
        return {Rational(1), Rational(0), 0};
    }
    LambdaValue out;
    out.value = 0;
    for (int r = 1;; ++r) {
        const Integer exponent = lambda_exponent(p, d, r);
        if (!exponent.fits_ulong_p() || exponent > 100000) {
            throw ParameterError("series tolerance too small for lambda_" + std::to_string(p));
        }
        out.value += make_rational(Integer(1), pow_int(gamma, exponent.get_ui()));
        out.terms = r;
        const Integer next = lambda_exponent(p, d, r + 1);
        if (!next.fits_ulong_p() || next > 100000) {
            throw ParameterError("series tolerance too small for lambda_" + std::to_string(p));
        }
        out.tail_bound = make_rational(Integer(gamma), pow_int(gamma, next.get_ui()) * (gamma - 1));
        if (out.tail_bound <= tolerance) break;
    }
    return out;
}

struct HashParams {
    int d = 0;
    int gamma = 0;
    Rational a;
    std::vector<Rational> lambda;       // lambda_1..lambda_d
    std::vector<Rational> lambda_tail;  // truncation bound per lambda_p
    std::vector<int> series_terms;
    std::vector<Rational> b;            // b_q = (2d+1)q
    Rational series_tolerance;

    int branch_count() const noexcept { return 2 * d + 1; }
    // Branch q's values lie in [b_q, b_q + interval_width()].
    Rational interval_width() const { return Rational(2 * d); }

    // Throws ParameterError naming the first broken invariant.
    void validate() const {
        if (d < 2) throw ParameterError("d must be at least 2, got " + std::to_string(d));
        if (gamma < 2 * d + 2) {
            throw ParameterError("gamma must satisfy gamma >= 2d+2 = " + std::to_string(2 * d + 2) + ", got " +
                                 std::to_string(gamma));
        }
        if (a != make_rational(1, static_cast<long>(gamma) * (gamma - 1))) {
            throw ParameterError("a must equal 1/(gamma(gamma-1))");
        }
        if (lambda.size() != static_cast<std::size_t>(d) || lambda_tail.size() != lambda.size()) {
            throw ParameterError("lambda needs exactly d entries and matching tail bounds");
        }
        if (lambda[0] != 1 || lambda_tail[0] != 0) {
            throw ParameterError("lambda_1 must be exactly 1");
        }
        for (std::size_t p = 0; p < lambda.size(); ++p) {
            if (lambda[p] <= 0 || lambda[p] > 1) {
                throw ParameterError("lambda_" + std::to_string(p + 1) + " outside (0, 1]");
            }
            if (lambda_tail[p] < 0) {
                throw ParameterError("lambda_tail_" + std::to_string(p + 1) + " is negative");
            }
        }
        if (b.size() != static_cast<std::size_t>(branch_count())) {
            throw ParameterError("b needs 2d+1 entries");
        }
        for (int q = 0; q < branch_count(); ++q) {
            if (b[static_cast<std::size_t>(q)] != (2 * d + 1) * q) {
                throw ParameterError("b_" + std::to_string(q) + " must equal (2d+1)q");
            }
        }
    }
};

inline HashParams make_params(int d, int gamma, const Rational& series_tolerance = default_series_tolerance()) {
    if (d < 2) {
        throw ParameterError("d must be at least 2, got " + std::to_string(d));
    }
    if (gamma < 2 * d + 2) {
        throw ParameterError("gamma must satisfy gamma >= 2d+2 = " + std::to_string(2 * d + 2) + ", got " +
                             std::to_string(gamma));
    }
    HashParams params;
    params.d = d;
    params.gamma = gamma;
    params.a = make_rational(1, static_cast<long>(gamma) * (gamma - 1));
    params.series_tolerance = series_tolerance;
    for (int p = 1; p <= d; ++p) {
        LambdaValue lambda = lambda_series(p, d, gamma, series_tolerance);
        params.lambda.push_back(std::move(lambda.value));
        params.lambda_tail.push_back(std::move(lambda.tail_bound));
        params.series_terms.push_back(lambda.terms);
    }
    for (int q = 0; q <= 2 * d; ++q) {
        params.b.emplace_back((2 * d + 1) * q);
    }
    return params;
}

// Psi_q(x) lies in [value, value + error_bound]: every truncation (phi digits
// and lambda series) is from below.
struct BranchValue {
    int q = 0;
    Rational value;
    Rational error_bound;
};

namespace detail {

inline void check_point(const HashParams& params, std::span<const Rational> x) {
    if (x.size() != static_cast<std::size_t>(params.d)) {
        throw DomainError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                          std::to_string(params.d));
    }
    for (std::size_t p = 0; p < x.size(); ++p) {
        if (x[p] < 0 || x[p] > 1) {
            throw DomainError("coordinate " + std::to_string(p + 1) + " = " + x[p].get_str() + " outside [0, 1]");
        }
    }
}

inline void check_branch(const HashParams& params, int q) {
    if (q < 0 || q >= params.branch_count()) {
        throw DomainError("branch index " + std::to_string(q) + " outside 0.." + std::to_string(2 * params.d));
    }
}

inline void check_inner_matches(const HashParams& params, const InnerSpec& inner) {
    if (inner.base() != params.gamma) {
        throw ParameterError("inner base " + std::to_string(inner.base()) + " differs from gamma " +
                             std::to_string(params.gamma));
    }
}

// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
// Each index is handled exactly once; results must be written per index.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), std::max<std::size_t>(count / 64, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) body(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace detail

inline BranchValue psi_eval(const HashParams& params, const InnerSpec& inner, std::span<const Rational> x, int q,
                            int depth) {
    detail::check_point(params, x);
    detail::check_branch(params, q);
    detail::check_inner_matches(params, inner);
    BranchValue out;
    out.q = q;
    out.value = params.b[static_cast<std::size_t>(q)];
    out.error_bound = 0;
    const Rational shift = params.a * q;
    for (std::size_t p = 0; p < x.size(); ++p) {
        const InnerValue phi = phi_eval(inner, x[p] + shift, depth);
        out.value += params.lambda[p] * phi.value;
        out.error_bound += params.lambda[p] * phi.error_bound + params.lambda_tail[p] * (phi.value + phi.error_bound);
    }
    return out;
}

inline std::vector<BranchValue> psi_all(const HashParams& params, const InnerSpec& inner, std::span<const Rational> x,
                                        int depth) {
    std::vector<BranchValue> out;
    out.reserve(static_cast<std::size_t>(params.branch_count()));
    for (int q = 0; q < params.branch_count(); ++q) out.push_back(psi_eval(params, inner, x, q, depth));
    return out;
}

// Double-precision counterpart of psi_eval (exact digits, floating-point
// accumulation).
inline double psi_fast(const HashParams& params, const InnerSpec& inner, std::span<const Rational> x, int q,
                       int depth) {
    detail::check_point(params, x);
    detail::check_branch(params, q);
    detail::check_inner_matches(params, inner);
    const Rational shift = params.a * q;
    double value = to_double(params.b[static_cast<std::size_t>(q)]);
    for (std::size_t p = 0; p < x.size(); ++p) {
        value += to_double(params.lambda[p]) * phi_fast(inner, x[p] + shift, depth);
    }
    return value;
}

// Cartesian product of grid_points(level, base) in d dimensions, last
// coordinate varying fastest.
inline std::vector<Point> grid_lattice(int level, int base, int d) {
    const std::vector<Rational> axis = grid_points(level, base);
    std::size_t total = 1;
    for (int p = 0; p < d; ++p) {
        total *= axis.size();
        if (total > 50'000'000) throw DomainError("grid lattice too large");
    }
    std::vector<Point> out;
    out.reserve(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Point x;
        x.reserve(idx.size());
        for (std::size_t i : idx) x.push_back(axis[i]);
        out.push_back(std::move(x));
        for (std::size_t p = idx.size(); p-- > 0;) {
            if (++idx[p] < axis.size()) break;
            idx[p] = 0;
        }
    }
    return out;
}

struct RangeReport {
    int level = 0;
    int depth = 0;
    std::size_t points_checked = 0;
    std::size_t violations = 0;
    std::vector<Rational> branch_min;  // smallest value seen per branch
    std::vector<Rational> branch_max;  // largest value + error bound per branch
    Rational min_gap;                  // min over q of branch_min[q+1] - branch_max[q]
    std::string witness;

    bool passed() const { return violations == 0 && min_gap >= 1; }
};

// Sweeps Psi_q over the level-k lattice and checks containment in
// [b_q, b_q + 2d] and the unit gap between consecutive branches.
inline RangeReport check_ranges(const HashParams& params, const InnerSpec& inner, int probe_level, int depth = 30) {
    if (probe_level < 1) throw DomainError("probe level must be at least 1");
    const std::vector<Point> lattice = grid_lattice(probe_level, params.gamma, params.d);
    const auto branches = static_cast<std::size_t>(params.branch_count());

    std::vector<std::vector<BranchValue>> values(lattice.size());
    detail::parallel_for(lattice.size(), [&](std::size_t i) { values[i] = psi_all(params, inner, lattice[i], depth); });

    RangeReport report;
    report.level = probe_level;
    report.depth = depth;
    report.points_checked = lattice.size();
    report.branch_min.assign(branches, Rational(0));
    report.branch_max.assign(branches, Rational(0));
    const Rational width = params.interval_width();
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        for (std::size_t q = 0; q < branches; ++q) {
            const BranchValue& v = values[i][q];
            const Rational upper = v.value + v.error_bound;
            if (i == 0 || v.value < report.branch_min[q]) report.branch_min[q] = v.value;
            if (i == 0 || upper > report.branch_max[q]) report.branch_max[q] = upper;
            if (v.value < params.b[q] || upper > params.b[q] + width) {
                ++report.violations;
                if (report.witness.empty()) {
                    report.witness = "q=" + std::to_string(q) + " point index " + std::to_string(i);
                }
            }
        }
    }
    report.min_gap = params.b.back() + width;
    for (std::size_t q = 0; q + 1 < branches; ++q) {
        const Rational gap = report.branch_min[q + 1] - report.branch_max[q];
        if (gap < report.min_gap) report.min_gap = gap;
    }
    return report;
}

// Rows are points, columns are distinct knot values y_l; entry (j, l) counts
// the branches q with Psi_q(x_j) = y_l at the given depth.
struct IncidenceSystem {
    int d = 0;
    int depth = 0;
    std::vector<Point> points;
    std::vector<Rational> knots;             // strictly increasing
    std::vector<int> knot_branch;            // branch of each knot
    std::vector<std::vector<std::size_t>> hits;  // hits[j][q] = knot index of Psi_q(x_j)

    std::size_t rows() const noexcept { return hits.size(); }
    std::size_t cols() const noexcept { return knots.size(); }

    int entry(std::size_t j, std::size_t l) const {
        return static_cast<int>(std::count(hits.at(j).begin(), hits.at(j).end(), l));
    }
    int row_sum(std::size_t j) const { return static_cast<int>(hits.at(j).size()); }

    SparseVector row(std::size_t j) const {
        std::vector<std::size_t> cols_hit = hits.at(j);
        std::sort(cols_hit.begin(), cols_hit.end());
        SparseVector out;
        for (std::size_t l : cols_hit) {
            if (!out.empty() && out.back().index == l) {
                out.back().value += 1;
            } else {
                out.push_back({l, Rational(1)});
            }
        }
        return out;
    }
};

namespace detail {

inline bool point_less(const Point& lhs, const Point& rhs) {
    return std::lexicographical_compare(lhs.begin(), lhs.end(), rhs.begin(), rhs.end());
}

}  // namespace detail

// Throws InputError naming the first pair of identical points (0-based
// indices, in the order given).
inline void require_distinct(std::span<const Point> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return detail::point_less(points[i], points[j]); });
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (points[order[k - 1]] == points[order[k]]) {
            const auto [first, second] = std::minmax(order[k - 1], order[k]);
            throw InputError("points " + std::to_string(first) + " and " + std::to_string(second) + " are identical");
        }
    }
}

inline IncidenceSystem build_incidence(const HashParams& params, const InnerSpec& inner, std::span<const Point> points,
                                       int depth) {
    for (const auto& x : points) detail::check_point(params, x);
    require_distinct(points);
    const auto branches = static_cast<std::size_t>(params.branch_count());

    std::vector<std::vector<BranchValue>> values(points.size());
    detail::parallel_for(points.size(), [&](std::size_t j) { values[j] = psi_all(params, inner, points[j], depth); });

    struct Slot {
        const Rational* value;
        std::size_t j;
        std::size_t q;
    };
    std::vector<Slot> slots;
    slots.reserve(points.size() * branches);
    for (std::size_t j = 0; j < points.size(); ++j) {
        for (std::size_t q = 0; q < branches; ++q) slots.push_back({&values[j][q].value, j, q});
    }
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& s, const Slot& t) { return *s.value < *t.value; });

    IncidenceSystem system;
    system.d = params.d;
    system.depth = depth;
    system.points.assign(points.begin(), points.end());
    system.hits.assign(points.size(), std::vector<std::size_t>(branches, 0));
    for (const Slot& s : slots) {
        if (system.knots.empty() || system.knots.back() != *s.value) {
            system.knots.push_back(*s.value);
            system.knot_branch.push_back(static_cast<int>(s.q));
        } else if (system.knot_branch.back() != static_cast<int>(s.q)) {
            throw InvariantError("knot shared by branches " + std::to_string(system.knot_branch.back()) + " and " +
                                 std::to_string(s.q));
        }
        system.hits[s.j][s.q] = system.knots.size() - 1;
    }
    return system;
}

struct SeparationVerdict {
    bool separated = true;
    std::size_t rank = 0;
    std::size_t rows = 0;
    // Integer closed-path weights over the rows (gcd 1, first nonzero entry
    // positive); empty when separated.
    std::vector<Integer> witness;

    // Row indices with nonzero weight.
    std::vector<std::size_t> closed_path() const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < witness.size(); ++j) {
            if (witness[j] != 0) out.push_back(j);
        }
        return out;
    }
};

namespace detail {

inline std::vector<Integer> normalize_witness(const SparseVector& combination, std::size_t rows) {
    Integer lcm = 1;
    for (const auto& e : combination) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), e.value.get_den_mpz_t());
    std::vector<Integer> out(rows, Integer(0));
    Integer gcd = 0;
    for (const auto& e : combination) {
        const Rational scaled = e.value * lcm;
        out[e.index] = scaled.get_num();
        mpz_gcd(gcd.get_mpz_t(), gcd.get_mpz_t(), out[e.index].get_mpz_t());
    }
    const auto first = std::find_if(out.begin(), out.end(), [](const Integer& v) { return v != 0; });
    if (first == out.end()) return out;
    if (*first < 0) gcd = -gcd;
    for (auto& v : out) v /= gcd;
    return out;
}

}  // namespace detail

// Separated iff the incidence rows are linearly independent over Q. The first
// dependent row yields the closed-path weights.
inline SeparationVerdict separation_check(const IncidenceSystem& system) {
    SeparationVerdict verdict;
    verdict.rows = system.rows();
    SparseEliminator eliminator(system.cols(), /*track_combinations=*/true);
    for (std::size_t j = 0; j < system.rows(); ++j) {
        auto dependency = eliminator.insert(system.row(j), Rational(0), j);
        if (dependency && verdict.separated) {
            verdict.separated = false;
            verdict.witness = detail::normalize_witness(dependency->combination, system.rows());
        }
    }
    verdict.rank = eliminator.rank();
    return verdict;
}

inline constexpr int kDefaultDepth = 30;
inline constexpr int kDefaultDepthCap = 240;

struct CertifiedSystem {
    IncidenceSystem system;
    SeparationVerdict verdict;
    std::vector<int> attempts;  // depths tried, in order
};

// Builds and checks the incidence system, doubling the depth (capped at
// depth_cap) while the check fails.
inline CertifiedSystem certify_separation(const HashParams& params, const InnerSpec& inner,
                                          std::span<const Point> points, int depth, int depth_cap = kDefaultDepthCap) {
    if (depth < 1) throw DomainError("depth must be at least 1");
    CertifiedSystem out;
    for (int k = depth;;) {
        out.attempts.push_back(k);
        out.system = build_incidence(params, inner, points, k);
        out.verdict = separation_check(out.system);
        if (out.verdict.separated || k >= depth_cap) break;
        k = std::min(2 * k, depth_cap);
    }
    return out;
}

// Raised when a point set admits a closed path at every depth tried.
class SeparationFailure : public std::runtime_error {
public:
    SeparationFailure(const std::string& message, std::vector<Integer> witness, int depth)
        : std::runtime_error(message), witness_(std::move(witness)), depth_(depth) {}

    const std::vector<Integer>& witness() const noexcept { return witness_; }
    int depth() const noexcept { return depth_; }

private:
    std::vector<Integer> witness_;
    int depth_;
};

}  // namespace knet
