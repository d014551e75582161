#pragma once

// Exact Gaussian elimination over sparse rational rows.
//
// Rows are inserted one at a time and reduced against the pivot rows already
// present. A pivot row never contains the pivot column of an older pivot, so
// reducing in insertion order of the pivots terminates and back substitution
// runs in reverse insertion order. Incidence and Gram matrices of separated
// sample sets are close to diagonal, which keeps fill-in small.

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "knet/rational.hpp"

namespace knet {

struct SparseEntry {
    std::size_t index;
    Rational value;
};

// Sorted by index, no explicit zeros.
using SparseVector = std::vector<SparseEntry>;

// y += alpha * x
inline void sparse_axpy(SparseVector& y, const Rational& alpha, const SparseVector& x) {
    SparseVector out;
    out.reserve(y.size() + x.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < y.size() || j < x.size()) {
        if (j == x.size() || (i < y.size() && y[i].index < x[j].index)) {
            out.push_back(std::move(y[i++]));
        } else if (i == y.size() || x[j].index < y[i].index) {
            out.push_back({x[j].index, alpha * x[j].value});
            ++j;
        } else {
            Rational sum = y[i].value + alpha * x[j].value;
            if (sum != 0) out.push_back({y[i].index, std::move(sum)});
            ++i;
            ++j;
        }
    }
    y = std::move(out);
}

inline const Rational* sparse_find(const SparseVector& v, std::size_t index) {
    std::size_t lo = 0;
    std::size_t hi = v.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (v[mid].index < index) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo < v.size() && v[lo].index == index ? &v[lo].value : nullptr;
}

class SparseEliminator {
public:
    struct Dependency {
        // Coefficients over inserted row ids whose combination is the zero row.
        SparseVector combination;
        // The same combination applied to the right-hand sides.
        Rational rhs_residual;
    };

    explicit SparseEliminator(std::size_t columns, bool track_combinations = false)
        : pivot_of_column_(columns, kNoPivot), track_(track_combinations) {}

    std::size_t rank() const noexcept { return pivots_.size(); }
    std::size_t columns() const noexcept { return pivot_of_column_.size(); }

    // Inserts row `row_id`. Returns the dependency when the row reduces to
    // zero against the rows inserted so far.
    std::optional<Dependency> insert(SparseVector entries, Rational rhs, std::size_t row_id) {
        SparseVector combination;
        if (track_) combination.push_back({row_id, Rational(1)});

        for (;;) {
            std::size_t best = kNoPivot;
            for (const auto& e : entries) {
                const std::size_t p = pivot_of_column_[e.index];
                if (p < best) best = p;
            }
            if (best == kNoPivot) break;
            const Pivot& pivot = pivots_[best];
            const Rational factor = -*sparse_find(entries, pivot.column) / pivot.lead;
            sparse_axpy(entries, factor, pivot.entries);
            rhs += factor * pivot.rhs;
            if (track_) sparse_axpy(combination, factor, pivot.combination);
        }

        if (entries.empty()) {
            return Dependency{std::move(combination), std::move(rhs)};
        }
        Pivot pivot;
        pivot.column = entries.front().index;
        pivot.lead = entries.front().value;
        pivot.entries = std::move(entries);
        pivot.rhs = std::move(rhs);
        pivot.combination = std::move(combination);
        pivot_of_column_[pivot.column] = pivots_.size();
        pivots_.push_back(std::move(pivot));
        return std::nullopt;
    }

    // Solution of the inserted system with free columns set to zero. Only
    // meaningful if every dependency had a zero rhs residual.
    std::vector<Rational> back_substitute() const {
        std::vector<Rational> x(pivot_of_column_.size(), Rational(0));
        for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
            Rational acc = it->rhs;
            for (const auto& e : it->entries) {
                if (e.index != it->column) acc -= e.value * x[e.index];
            }
            x[it->column] = acc / it->lead;
        }
        return x;
    }

private:
    static constexpr std::size_t kNoPivot = std::numeric_limits<std::size_t>::max();

    struct Pivot {
        std::size_t column = 0;
        Rational lead;
        SparseVector entries;
        Rational rhs;
        SparseVector combination;
    };

    std::vector<std::size_t> pivot_of_column_;
    std::vector<Pivot> pivots_;
    bool track_;
};

}  // namespace knet
