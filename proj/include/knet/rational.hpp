#pragma once

// Exact rational numbers (GMP backed), text conversion, and base-gamma digit
// expansions.

#include <gmpxx.h>

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "knet/errors.hpp"

namespace knet {

using Integer = mpz_class;
using Rational = mpq_class;

inline Integer pow_int(long base, unsigned long exponent) {
    Integer result;
    mpz_ui_pow_ui(result.get_mpz_t(), static_cast<unsigned long>(base), exponent);
    return result;
}

// Normalized fraction num/den. The sign ends up on the numerator.
inline Rational make_rational(const Integer& num, const Integer& den) {
    if (den == 0) {
        throw DomainError("rational with zero denominator");
    }
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline Rational make_rational(long num, long den) {
    return make_rational(Integer(num), Integer(den));
}

inline Integer floor_of(const Rational& x) {
    Integer result;
    mpz_fdiv_q(result.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return result;
}

inline Rational abs_of(const Rational& x) { return x < 0 ? Rational(-x) : x; }

inline double to_double(const Rational& x) { return x.get_d(); }

// Always "p/q", also for integers ("3/1", "0/1"). Used by the model format.
inline std::string to_fraction_string(const Rational& x) {
    return x.get_num().get_str() + "/" + x.get_den().get_str();
}

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

inline Integer parse_integer(std::string_view s, std::string_view whole) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s)) {
        throw DomainError("malformed number '" + std::string(whole) + "'");
    }
    Integer value(std::string(s), 10);
    return negative ? Integer(-value) : value;
}

}  // namespace detail

// Accepts "p/q", integers, and decimals with an optional exponent
// ("0.25", "-1.5e-3"). Decimals are converted exactly.
inline Rational parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    const std::string_view whole = text;
    if (text.empty()) {
        throw DomainError("empty number");
    }

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Integer num = detail::parse_integer(text.substr(0, slash), whole);
        std::string_view den_text = text.substr(slash + 1);
        if (!den_text.empty() && den_text.front() == '+') den_text.remove_prefix(1);
        Integer den = detail::parse_integer(den_text, whole);
        return make_rational(num, den);
    }

    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }

    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        Integer exp_value = detail::parse_integer(text.substr(e + 1), whole);
        if (!exp_value.fits_slong_p() || abs(exp_value) > 100000) {
            throw DomainError("exponent out of range in '" + std::string(whole) + "'");
        }
        exponent = exp_value.get_si();
        text = text.substr(0, e);
    }

    std::string mantissa;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        std::string_view int_part = text.substr(0, dot);
        std::string_view frac_part = text.substr(dot + 1);
        if ((int_part.empty() && frac_part.empty()) || (!int_part.empty() && !detail::all_digits(int_part)) ||
            (!frac_part.empty() && !detail::all_digits(frac_part))) {
            throw DomainError("malformed number '" + std::string(whole) + "'");
        }
        mantissa = std::string(int_part) + std::string(frac_part);
        exponent -= static_cast<long>(frac_part.size());
    } else {
        if (!detail::all_digits(text)) {
            throw DomainError("malformed number '" + std::string(whole) + "'");
        }
        mantissa = std::string(text);
    }

    Integer digits(mantissa, 10);
    if (negative) digits = -digits;
    if (exponent >= 0) {
        return Rational(digits * pow_int(10, static_cast<unsigned long>(exponent)));
    }
    return make_rational(digits, pow_int(10, static_cast<unsigned long>(-exponent)));
}

// Floor-truncated base-gamma expansion of a value in [0, 2).
struct DigitExpansion {
    int base = 0;
    Integer integer_part;
    std::vector<int> digits;
    bool exact = false;

    // integer_part + sum_r digits[r] * base^-(r+1)
    Rational value() const {
        Integer num = 0;
        for (int digit : digits) {
            num = num * base + digit;
        }
        const Integer scale = pow_int(base, digits.size());
        return Rational(integer_part) + make_rational(num, scale);
    }
};

inline void check_base(int base) {
    if (base < 2) {
        throw DomainError("digit base must be at least 2, got " + std::to_string(base));
    }
}

inline DigitExpansion expand_digits(const Rational& x, int base, int depth) {
    check_base(base);
    if (depth < 1) {
        throw DomainError("expansion depth must be at least 1");
    }
    if (x < 0 || x >= 2) {
        throw DomainError("digit expansion needs x in [0, 2), got " + x.get_str());
    }

    DigitExpansion out;
    out.base = base;
    out.integer_part = floor_of(x);
    out.digits.reserve(static_cast<std::size_t>(depth));

    // frac(x) = rem / den; each step shifts one base-gamma digit out.
    const Integer& den = x.get_den();
    Integer rem = x.get_num() - out.integer_part * den;
    Integer digit;
    for (int r = 0; r < depth; ++r) {
        rem *= base;
        mpz_fdiv_qr(digit.get_mpz_t(), rem.get_mpz_t(), rem.get_mpz_t(), den.get_mpz_t());
        out.digits.push_back(static_cast<int>(digit.get_si()));
    }
    out.exact = (rem == 0);
    return out;
}

// j * base^-level for j = 0..base^level.
inline std::vector<Rational> grid_points(int level, int base) {
    check_base(base);
    if (level < 1) {
        throw DomainError("grid level must be at least 1");
    }
    const Integer scale = pow_int(base, static_cast<unsigned long>(level));
    if (scale > 10'000'000) {
        throw DomainError("grid level too large");
    }
    const long count = scale.get_si();
    std::vector<Rational> points;
    points.reserve(static_cast<std::size_t>(count) + 1);
    for (long j = 0; j <= count; ++j) {
        points.push_back(make_rational(Integer(j), scale));
    }
    return points;
}

}  // namespace knet
