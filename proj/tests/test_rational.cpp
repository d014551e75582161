#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "knet/rational.hpp"
#include "oracles.hpp"

using namespace knet;

TEST(MakeRational, Normalizes) {
    EXPECT_EQ(to_fraction_string(make_rational(1, 30)), "1/30");
    EXPECT_EQ(make_rational(2, 4), make_rational(1, 2));
    EXPECT_EQ(to_fraction_string(make_rational(2, 4)), "1/2");
    EXPECT_EQ(to_fraction_string(make_rational(3, -6)), "-1/2");
    EXPECT_EQ(to_fraction_string(make_rational(0, -7)), "0/1");
}

TEST(MakeRational, ZeroDenominatorIsDomainError) {
    EXPECT_THROW(make_rational(1, 0), DomainError);
}

TEST(ParseRational, DecimalAndFractionSyntax) {
    EXPECT_EQ(parse_rational("0.25"), make_rational(1, 4));
    EXPECT_EQ(parse_rational(" 3/12 "), make_rational(1, 4));
    EXPECT_EQ(parse_rational("-1.5e-3"), make_rational(-3, 2000));
    EXPECT_EQ(parse_rational("2E2"), Rational(200));
    EXPECT_EQ(parse_rational(".5"), make_rational(1, 2));
    EXPECT_EQ(parse_rational("7"), Rational(7));
    EXPECT_EQ(parse_rational("+4/-8"), make_rational(-1, 2));
    EXPECT_EQ(parse_rational("0.1"), make_rational(1, 10));
}

TEST(ParseRational, RejectsMalformed) {
    for (const char* bad : {"", "abc", "1/0", "1.2.3", "--1", "1e", "1/", "/2", ".", "0x10", "1,5"}) {
        EXPECT_THROW(parse_rational(bad), DomainError) << bad;
    }
}

TEST(ExpandDigits, SingleDigitValue) {
    const DigitExpansion e = expand_digits(make_rational(1, 6), 6, 3);
    EXPECT_EQ(e.integer_part, 0);
    EXPECT_EQ(e.digits, (std::vector<int>{1, 0, 0}));
    EXPECT_TRUE(e.exact);
}

TEST(ExpandDigits, RepeatingExpansionOfOneThirtieth) {
    // 1/30 = 0.0111..._6 by long division.
    const DigitExpansion e = expand_digits(make_rational(1, 30), 6, 4);
    EXPECT_EQ(e.digits, (std::vector<int>{0, 1, 1, 1}));
    EXPECT_FALSE(e.exact);
    EXPECT_EQ(e.digits, oracle::digits_by_scaling(make_rational(1, 30), 6, 4));
}

TEST(ExpandDigits, IntegerCase) {
    const DigitExpansion e = expand_digits(Rational(1), 6, 2);
    EXPECT_EQ(e.integer_part, 1);
    EXPECT_EQ(e.digits, (std::vector<int>{0, 0}));
    EXPECT_TRUE(e.exact);
    EXPECT_EQ(e.value(), 1);
}

TEST(ExpandDigits, DomainErrors) {
    EXPECT_THROW(expand_digits(Rational(2), 6, 3), DomainError);
    EXPECT_THROW(expand_digits(make_rational(-1, 5), 6, 3), DomainError);
    EXPECT_THROW(expand_digits(make_rational(1, 5), 1, 3), DomainError);
    EXPECT_THROW(expand_digits(make_rational(1, 5), 6, 0), DomainError);
}

TEST(ExpandDigits, TerminatingFormIsCanonical) {
    // 1/2 in base 6 is 0.3, never 0.2555...
    const DigitExpansion e = expand_digits(make_rational(1, 2), 6, 10);
    EXPECT_EQ(e.digits.front(), 3);
    for (std::size_t r = 1; r < e.digits.size(); ++r) EXPECT_EQ(e.digits[r], 0);
    EXPECT_TRUE(e.exact);
}

// Property: floor truncation bound and round trip, against the scaling oracle.
TEST(ExpandDigitsProperty, TruncationBoundAndRoundTrip) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> num(0, 1999);
    std::uniform_int_distribution<long> den(1, 1000);
    std::uniform_int_distribution<int> base_dist(2, 12);
    std::uniform_int_distribution<int> depth_dist(1, 40);
    for (int trial = 0; trial < 2000; ++trial) {
        const long d = den(rng);
        const Rational x = make_rational(num(rng) % (2 * d), d);
        const int base = base_dist(rng);
        const int k = depth_dist(rng);
        const DigitExpansion e = expand_digits(x, base, k);
        const Rational diff = x - e.value();
        const Rational ulp = make_rational(Integer(1), pow_int(base, static_cast<unsigned long>(k)));
        ASSERT_GE(diff, 0) << x;
        ASSERT_LT(diff, ulp) << x;
        ASSERT_EQ(e.exact, diff == 0);
        ASSERT_EQ(e.digits, oracle::digits_by_scaling(x - Rational(e.integer_part), base, k));
        for (int digit : e.digits) {
            ASSERT_GE(digit, 0);
            ASSERT_LT(digit, base);
        }
    }
}

TEST(ExpandDigitsProperty, TerminatingRationalsRoundTrip) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const int base = 6;
        const int k = 1 + static_cast<int>(rng() % 12);
        const Integer scale = pow_int(base, static_cast<unsigned long>(k));
        const Integer j(static_cast<unsigned long>(rng() % (2 * scale.get_ui())));
        const Rational x = make_rational(j, scale);
        const DigitExpansion e = expand_digits(x, base, k);
        ASSERT_TRUE(e.exact);
        ASSERT_EQ(e.value(), x);
    }
}

TEST(RationalProperty, ArithmeticIsExact) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5000; ++trial) {
        const Rational a = oracle::random_rational(rng);
        const Rational b = oracle::random_rational(rng);
        ASSERT_EQ(Rational(a + b - b), a);
        // order agrees with cross multiplication (denominators positive)
        const bool cross = a.get_num() * b.get_den() < b.get_num() * a.get_den();
        ASSERT_EQ(a < b, cross);
        ASSERT_EQ(parse_rational(to_fraction_string(a)), a);
    }
}

TEST(RationalProperty, NoOverflowAtDeepPowers) {
    // gamma^-240 and beyond must stay exact.
    const Rational tiny = make_rational(Integer(1), pow_int(6, 240));
    EXPECT_EQ(Rational(tiny * Rational(pow_int(6, 240))), 1);
    EXPECT_GT(Rational(1) + tiny, 1);
}

TEST(GridPoints, Definition) {
    const auto level1 = grid_points(1, 6);
    ASSERT_EQ(level1.size(), 7u);
    for (int j = 0; j <= 6; ++j) EXPECT_EQ(level1[static_cast<std::size_t>(j)], make_rational(j, 6));

    const auto level2 = grid_points(2, 6);
    ASSERT_EQ(level2.size(), 37u);
    EXPECT_EQ(level2[1] - level2[0], make_rational(1, 36));
    for (std::size_t i = 1; i < level2.size(); ++i) EXPECT_LT(level2[i - 1], level2[i]);

    for (int base : {2, 3, 10}) {
        for (int k : {1, 2, 3}) {
            const auto pts = grid_points(k, base);
            EXPECT_EQ(pts.front(), 0);
            EXPECT_EQ(pts.back(), 1);
        }
    }
    EXPECT_THROW(grid_points(0, 6), DomainError);
}
