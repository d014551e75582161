#pragma once

// The universal inner function phi.
//
// phi is a digit-weight (Cantor-like) monotone function. With base gamma and
// positive weights w(0..gamma-1) summing to one, a point with base-gamma
// digits 0.i1 i2 i3 ... maps to
//
//     phi(x) = c(i1) + w(i1) * (c(i2) + w(i2) * (c(i3) + ...))
//
// where c(i) = w(0) + ... + w(i-1). On [1, 2) the integer part is carried
// through, so phi(x + 1) = phi(x) + 1 holds exactly. If every weight is at most
// 1/2, each level-k cell of width gamma^-k is mapped onto an interval of
// length at most 2^-k, which gives the Hoelder exponent ln 2 / ln gamma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knet/errors.hpp"
#include "knet/rational.hpp"

namespace knet {

class InnerSpec {
public:
    InnerSpec(int base, std::vector<Rational> weights) : base_(base), weights_(std::move(weights)) {
        validate();
        build_tables();
    }

    // w(0) = 1/2, w(i) = 1/(2(gamma-1)) for i >= 1.
    static InnerSpec default_for(int base) {
        if (base < 3) {
            throw ParameterError("default inner weights need gamma >= 3");
        }
        std::vector<Rational> weights(static_cast<std::size_t>(base), make_rational(1, 2L * (base - 1)));
        weights[0] = make_rational(1, 2);
        return InnerSpec(base, std::move(weights));
    }

    int base() const noexcept { return base_; }
    const std::vector<Rational>& weights() const noexcept { return weights_; }
    const std::vector<Rational>& cumulative() const noexcept { return cumulative_; }
    const Rational& weight(int digit) const { return weights_.at(static_cast<std::size_t>(digit)); }

    // Integer form of the tables over the common denominator L:
    // w(i) = scaled_weight(i) / L, c(i) = scaled_cumulative(i) / L.
    const Integer& common_denominator() const noexcept { return common_den_; }
    const Integer& scaled_weight(int digit) const { return scaled_weights_[static_cast<std::size_t>(digit)]; }
    const Integer& scaled_cumulative(int digit) const { return scaled_cumulative_[static_cast<std::size_t>(digit)]; }

    double weight_fast(int digit) const { return fast_weights_[static_cast<std::size_t>(digit)]; }
    double cumulative_fast(int digit) const { return fast_cumulative_[static_cast<std::size_t>(digit)]; }

    // ln 2 / ln gamma
    double holder_exponent() const { return std::log(2.0) / std::log(static_cast<double>(base_)); }

    friend bool operator==(const InnerSpec& lhs, const InnerSpec& rhs) {
        return lhs.base_ == rhs.base_ && lhs.weights_ == rhs.weights_;
    }

private:
    void validate() const {
        if (base_ < 2) {
            throw ParameterError("inner base must be at least 2, got " + std::to_string(base_));
        }
        if (weights_.size() != static_cast<std::size_t>(base_)) {
            throw ParameterError("inner spec needs " + std::to_string(base_) + " weights, got " +
                                 std::to_string(weights_.size()));
        }
        Rational sum = 0;
        const Rational half = make_rational(1, 2);
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (weights_[i] <= 0) {
                throw ParameterError("inner weight w(" + std::to_string(i) + ") = " + weights_[i].get_str() +
                                     " is not positive");
            }
            if (weights_[i] > half) {
                throw ParameterError("inner weight w(" + std::to_string(i) + ") = " + weights_[i].get_str() +
                                     " exceeds 1/2");
            }
            sum += weights_[i];
        }
        if (sum != 1) {
            throw ParameterError("inner weights sum to " + sum.get_str() + ", expected 1");
        }
    }

    void build_tables() {
        cumulative_.assign(weights_.size(), Rational(0));
        for (std::size_t i = 1; i < weights_.size(); ++i) {
            cumulative_[i] = cumulative_[i - 1] + weights_[i - 1];
        }
        common_den_ = 1;
        for (const auto& w : weights_) {
            mpz_lcm(common_den_.get_mpz_t(), common_den_.get_mpz_t(), w.get_den_mpz_t());
        }
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            scaled_weights_.push_back(weights_[i].get_num() * (common_den_ / weights_[i].get_den()));
            scaled_cumulative_.push_back(cumulative_[i].get_num() * (common_den_ / cumulative_[i].get_den()));
            fast_weights_.push_back(to_double(weights_[i]));
            fast_cumulative_.push_back(to_double(cumulative_[i]));
        }
    }

    int base_;
    std::vector<Rational> weights_;
    std::vector<Rational> cumulative_;
    Integer common_den_;
    std::vector<Integer> scaled_weights_;
    std::vector<Integer> scaled_cumulative_;
    std::vector<double> fast_weights_;
    std::vector<double> fast_cumulative_;
};

// phi(x) lies in [value, value + error_bound].
struct InnerValue {
    Rational value;
    Rational error_bound;
};

// Evaluates phi from an explicit digit string. The digits need not be the
// canonical expansion; this is how both expansions of a terminating rational
// are compared.
inline InnerValue phi_from_digits(const InnerSpec& spec, const Integer& integer_part, std::span<const int> digits) {
    const Integer& den = spec.common_denominator();
    Integer partial = 0;  // over den^r
    Integer product = 1;  // prod of scaled weights, over den^r
    for (int digit : digits) {
        if (digit < 0 || digit >= spec.base()) {
            throw DomainError("digit " + std::to_string(digit) + " outside base " + std::to_string(spec.base()));
        }
        partial = partial * den + spec.scaled_cumulative(digit) * product;
        product *= spec.scaled_weight(digit);
    }
    Integer scale;
    mpz_pow_ui(scale.get_mpz_t(), den.get_mpz_t(), digits.size());
    return {Rational(integer_part) + make_rational(partial, scale), make_rational(product, scale)};
}

inline void check_inner_domain(const Rational& x) {
    if (x < 0 || x >= 2) {
        throw DomainError("inner function needs x in [0, 2), got " + x.get_str());
    }
}

// Depth-k truncation of phi. When x terminates within k digits the remaining
// digits are zero, contribute c(0) = 0, and the error bound collapses to 0.
inline InnerValue phi_eval(const InnerSpec& spec, const Rational& x, int depth) {
    check_inner_domain(x);
    const DigitExpansion expansion = expand_digits(x, spec.base(), depth);
    InnerValue out = phi_from_digits(spec, expansion.integer_part, expansion.digits);
    if (expansion.exact) {
        out.error_bound = 0;
    }
    return out;
}

// Exact phi at a rational that terminates within `depth` base-gamma digits.
inline Rational phi_exact(const InnerSpec& spec, const Rational& x, int depth) {
    check_inner_domain(x);
    const DigitExpansion expansion = expand_digits(x, spec.base(), depth);
    if (!expansion.exact) {
        throw DomainError(x.get_str() + " does not terminate within " + std::to_string(depth) +
                          " base-" + std::to_string(spec.base()) + " digits; use phi_eval");
    }
    return phi_from_digits(spec, expansion.integer_part, expansion.digits).value;
}

// Double-precision path: digits are still extracted exactly, only the
// accumulation runs in floating point.
inline double phi_fast(const InnerSpec& spec, const Rational& x, int depth) {
    check_inner_domain(x);
    const DigitExpansion expansion = expand_digits(x, spec.base(), depth);
    double tail = 0.0;
    for (auto it = expansion.digits.rbegin(); it != expansion.digits.rend(); ++it) {
        tail = spec.cumulative_fast(*it) + spec.weight_fast(*it) * tail;
    }
    return expansion.integer_part.get_d() + tail;
}

// Depth that guarantees an error bound <= eps (weights never exceed 1/2).
inline int depth_for_accuracy(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw DomainError("accuracy must be a positive finite number");
    }
    return std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / eps))));
}

struct PropertyCheck {
    std::string name;
    bool passed = true;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double measured = 0.0;
    std::string witness;
};

struct PropertyReport {
    std::vector<PropertyCheck> checks;
    double holder_constant = 0.0;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
    }
    const PropertyCheck* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

inline constexpr double kHolderConstantLimit = 4.0;

namespace detail {

// Uniform random rational in [0, 1] with denominator 10^9 (never terminating
// in a base without the factor 5).
inline Rational random_unit(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> dist(0, 1'000'000'000ULL);
    return make_rational(Integer(static_cast<unsigned long>(dist(rng))), Integer(1'000'000'000UL));
}

inline std::string pair_witness(const Rational& x, const Rational& y) {
    return "x=" + x.get_str() + " y=" + y.get_str();
}

}  // namespace detail

// Randomized property suite for an inner spec: monotonicity over sorted
// samples, the Hoelder bound with C <= 4, the shift identity at terminating
// rationals, phi([0,1]) within [0,1], and agreement of the two expansions of
// terminating rationals.
inline PropertyReport verify_inner(const InnerSpec& spec, std::size_t samples, int depth, std::uint64_t seed) {
    if (samples < 2) {
        throw DomainError("verify_inner needs at least 2 samples");
    }
    if (depth < 1) {
        throw DomainError("verify_inner needs depth >= 1");
    }
    std::mt19937_64 rng(seed);
    PropertyReport report;
    const int base = spec.base();

    // (a) monotonicity on sorted samples, (d) containment
    {
        std::vector<Rational> xs;
        xs.reserve(samples);
        for (std::size_t i = 0; i < samples; ++i) xs.push_back(detail::random_unit(rng));
        std::sort(xs.begin(), xs.end());

        PropertyCheck mono;
        mono.name = "monotonicity";
        PropertyCheck range;
        range.name = "unit_range";
        std::vector<InnerValue> values;
        values.reserve(xs.size());
        for (const auto& x : xs) values.push_back(phi_eval(spec, x, depth));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ++range.trials;
            if (values[i].value < 0 || values[i].value + values[i].error_bound > 1) {
                ++range.violations;
                if (range.witness.empty()) range.witness = "x=" + xs[i].get_str();
            }
            if (i + 1 < xs.size()) {
                ++mono.trials;
                // truncation keeps digit order, so the truncated values are monotone too
                if (values[i].value > values[i + 1].value) {
                    ++mono.violations;
                    if (mono.witness.empty()) mono.witness = detail::pair_witness(xs[i], xs[i + 1]);
                }
            }
        }
        for (const auto& endpoint : {Rational(0), Rational(1)}) {
            ++range.trials;
            const InnerValue v = phi_eval(spec, endpoint, depth);
            if (v.value != endpoint || v.error_bound != 0) {
                ++range.violations;
                if (range.witness.empty()) range.witness = "endpoint x=" + endpoint.get_str();
            }
        }
        mono.passed = mono.violations == 0;
        range.passed = range.violations == 0;
        report.checks.push_back(std::move(mono));
        report.checks.push_back(std::move(range));
    }

    // (b) Hoelder bound; half the pairs are independent, half are close
    // pairs with a log-uniform gap in [1e-15, 1/2].
    {
        PropertyCheck holder;
        holder.name = "holder";
        const double alpha = spec.holder_exponent();
        std::uniform_real_distribution<double> log_gap(-15.0, std::log10(0.5));
        double worst = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            Rational x = detail::random_unit(rng);
            Rational y;
            if (i % 2 == 0) {
                y = detail::random_unit(rng);
            } else {
                const Rational gap(std::pow(10.0, log_gap(rng)));
                y = x + gap <= 1 ? Rational(x + gap) : Rational(x - gap);
            }
            if (x == y) continue;
            ++holder.trials;
            const InnerValue vx = phi_eval(spec, x, depth);
            const InnerValue vy = phi_eval(spec, y, depth);
            // Upper bound on |phi(x) - phi(y)| from the truncations.
            const Rational diff = abs_of(vx.value - vy.value) + std::max(vx.error_bound, vy.error_bound);
            const double ratio = to_double(diff) / std::pow(to_double(abs_of(x - y)), alpha);
            if (ratio > worst) worst = ratio;
            if (ratio > kHolderConstantLimit) {
                ++holder.violations;
                if (holder.witness.empty()) holder.witness = detail::pair_witness(x, y);
            }
        }
        holder.measured = worst;
        holder.passed = holder.violations == 0;
        report.holder_constant = worst;
        report.checks.push_back(std::move(holder));
    }

    // (c) shift identity at terminating rationals j / gamma^m
    {
        PropertyCheck shift;
        shift.name = "shift_identity";
        const std::size_t count = std::max<std::size_t>(samples / 10, 10);
        int max_level = 1;
        while (max_level < depth && pow_int(base, static_cast<unsigned long>(max_level + 1)) < Integer(1UL << 62)) {
            ++max_level;
        }
        std::uniform_int_distribution<int> level_dist(1, max_level);
        for (std::size_t i = 0; i < count; ++i) {
            const int level = level_dist(rng);
            const Integer scale = pow_int(base, static_cast<unsigned long>(level));
            std::uniform_int_distribution<unsigned long> numerator(0, scale.get_ui() - 1);
            const Integer j(numerator(rng));
            const Rational x = make_rational(j, scale);
            ++shift.trials;
            if (phi_exact(spec, x + 1, depth) != phi_exact(spec, x, depth) + 1) {
                ++shift.violations;
                if (shift.witness.empty()) shift.witness = "x=" + x.get_str();
            }
        }
        shift.passed = shift.violations == 0;
        report.checks.push_back(std::move(shift));
    }

    // (e) 0.i1..ik and 0.i1..(ik-1)(gamma-1)(gamma-1)... agree to 2 * 2^-depth
    {
        PropertyCheck expansions;
        expansions.name = "expansion_consistency";
        const std::size_t count = std::max<std::size_t>(samples / 100, 10);
        std::uniform_int_distribution<int> digit_dist(0, base - 1);
        std::uniform_int_distribution<int> length_dist(1, std::max(1, depth / 2));
        for (std::size_t i = 0; i < count; ++i) {
            const int length = length_dist(rng);
            std::vector<int> digits(static_cast<std::size_t>(length));
            for (auto& digit : digits) digit = digit_dist(rng);
            if (digits.back() == 0) digits.back() = 1;
            std::vector<int> lower = digits;
            lower.back() -= 1;
            lower.resize(static_cast<std::size_t>(depth), base - 1);
            digits.resize(static_cast<std::size_t>(depth), 0);
            ++expansions.trials;
            const InnerValue upper = phi_from_digits(spec, 0, digits);
            const InnerValue tail = phi_from_digits(spec, 0, lower);
            const Rational limit = make_rational(Integer(2), pow_int(2, static_cast<unsigned long>(depth)));
            if (abs_of(upper.value - tail.value) > limit) {
                ++expansions.violations;
                if (expansions.witness.empty()) {
                    expansions.witness = "digits of length " + std::to_string(length);
                }
            }
        }
        expansions.passed = expansions.violations == 0;
        report.checks.push_back(std::move(expansions));
    }
    return report;
}

}  // namespace knet
