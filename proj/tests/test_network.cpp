#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "knet/network.hpp"
#include "oracles.hpp"

using namespace knet;

namespace {

SampleSet random_samples(std::mt19937_64& rng, std::size_t n, int d, long den = 1000000) {
    std::uniform_int_distribution<long> num(0, den);
    SampleSet s;
    while (s.points.size() < n) {
        Point x;
        for (int p = 0; p < d; ++p) x.push_back(make_rational(num(rng), den));
        if (std::find(s.points.begin(), s.points.end(), x) != s.points.end()) continue;
        s.points.push_back(x);
        s.targets.push_back(x[0] * x[1]);
    }
    return s;
}

KNetModel fitted_model(std::uint64_t seed, std::size_t n, int d = 2, int gamma = 6) {
    std::mt19937_64 rng(seed);
    const SampleSet samples = random_samples(rng, n, d);
    InnerSpec inner = InnerSpec::default_for(gamma);
    HashParams params = make_params(d, gamma);
    FitResult fit = fit_exact(samples, params, inner, 30);
    ModelMeta meta;
    meta.depth = fit.report.depth;
    meta.sample_hash = "test";
    return assemble(std::move(inner), std::move(params), std::move(fit.outer), meta);
}

std::string expect_parse_error(const std::string& text) {
    try {
        load(text);
    } catch (const ParseError& e) {
        return e.location() + " | " + e.what();
    }
    ADD_FAILURE() << "no ParseError";
    return {};
}

}  // namespace

TEST(Assemble, NamesTheBrokenField) {
    const KNetModel model = fitted_model(1, 5);
    try {
        assemble(InnerSpec::default_for(8), model.params(), model.outer(), model.meta());
        FAIL();
    } catch (const ParameterError& e) {
        EXPECT_NE(std::string(e.what()).find("inner.base"), std::string::npos);
    }
    try {
        assemble(InnerSpec::default_for(8), make_params(3, 8), model.outer(), model.meta());
        FAIL();
    } catch (const ParameterError& e) {
        EXPECT_NE(std::string(e.what()).find("outer.branches"), std::string::npos);
    }
    ModelMeta meta = model.meta();
    meta.depth = 0;
    EXPECT_THROW(assemble(model.inner(), model.params(), model.outer(), meta), ParameterError);
}

TEST(Eval, ReproducesSamplesExactly) {
    std::mt19937_64 rng(2);
    const SampleSet samples = random_samples(rng, 40, 2);
    InnerSpec inner = InnerSpec::default_for(6);
    HashParams params = make_params(2, 6);
    FitResult fit = fit_exact(samples, params, inner, 30);
    const KNetModel model = assemble(inner, params, fit.outer);
    for (std::size_t j = 0; j < samples.points.size(); ++j) {
        const EvalResult r = eval(model, samples.points[j]);
        ASSERT_EQ(r.w, samples.targets[j]);
        ASSERT_EQ(r.branch_inputs.size(), 5u);
        Rational sum = 0;
        for (const auto& z : r.branch_outputs) sum += z;
        ASSERT_EQ(sum, r.w);
    }
}

TEST(Eval, LayerWidths) {
    const KNetModel model = fitted_model(3, 5);
    EXPECT_EQ(model.layer_widths(), (std::array<int, 4>{2, 10, 5, 1}));
    EXPECT_EQ(fitted_model(3, 5, 3, 8).layer_widths(), (std::array<int, 4>{3, 21, 7, 1}));
}

// Property: the deep evaluation lies inside the shallow error band (both
// bands contain the untruncated value).
TEST(EvalProperty, ErrorBoundIsSound) {
    const KNetModel model = fitted_model(4, 30);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> num(0, 999999937);
    for (int trial = 0; trial < 100; ++trial) {
        const Point x{make_rational(num(rng), 999999937), make_rational(num(rng), 999999937)};
        const EvalResult shallow = eval(model, x, 8);
        const EvalResult deep = eval(model, x, 120);
        ASSERT_GE(shallow.error_bound, 0);
        ASSERT_LE(abs_of(shallow.w - deep.w), shallow.error_bound + deep.error_bound) << trial;
    }
}

TEST(EvalProperty, BoundedByMaxKnot) {
    const KNetModel model = fitted_model(6, 30);
    const Rational bound = model.outer().max_abs_value() * model.params().branch_count();
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Point x{make_rational(static_cast<long>(rng() % 1001), 1000), make_rational(static_cast<long>(rng() % 1001), 1000)};
        ASSERT_LE(abs_of(eval(model, x).w), bound);
    }
}

TEST(EvalProperty, FastMatchesExactWithinBound) {
    const KNetModel model = fitted_model(8, 50);
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<long> num(0, 1000000);
    for (int trial = 0; trial < 300; ++trial) {
        const Point x{make_rational(num(rng), 1000000), make_rational(num(rng), 1000000)};
        const EvalResult exact = eval(model, x);
        const FastEvalResult fast = eval_fast(model, x);
        ASSERT_LE(std::abs(fast.w - to_double(exact.w)), to_double(exact.error_bound) + 1e-12) << trial;
        // bounds far below the resolution of Psi must survive in double precision
        const double expected = to_double(exact.error_bound);
        ASSERT_EQ(fast.error_bound > 0.0, expected > 0.0) << trial;
        ASSERT_NEAR(fast.error_bound, expected, 1e-6 * expected) << trial;
    }
}

TEST(EvalBatch, OrderAndFirstFailure) {
    const KNetModel model = fitted_model(10, 10);
    std::vector<Point> pts{{0, 0}, {make_rational(1, 2), make_rational(1, 3)}, {1, 1}};
    const auto results = eval_batch(model, pts, 30);
    ASSERT_EQ(results.size(), 3u);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(results[i].w, eval(model, pts[i], 30).w);
    const auto fast = eval_batch_fast(model, pts, 30);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(fast[i].w, eval_fast(model, pts[i], 30).w);

    pts.push_back({Rational(2), 0});
    pts.push_back({Rational(0)});
    try {
        eval_batch(model, pts, 30);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("point 3: ", 0), 0u) << e.what();
    }
}

TEST(Serialization, RoundTripPreservesEvaluation) {
    const KNetModel model = fitted_model(11, 40);
    const std::string text = save(model);
    const KNetModel loaded = load(text);
    EXPECT_EQ(save(loaded), text);
    EXPECT_TRUE(loaded.inner() == model.inner());
    EXPECT_TRUE(loaded.outer() == model.outer());
    EXPECT_TRUE(loaded.meta() == model.meta());
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Point x{oracle::random_rational(rng, 500, 997) / 1000 + make_rational(1, 2),
                      oracle::random_rational(rng, 500, 997) / 1000 + make_rational(1, 2)};
        ASSERT_EQ(eval(loaded, x).w, eval(model, x).w);
        ASSERT_EQ(eval(loaded, x).error_bound, eval(model, x).error_bound);
    }
}

TEST(Serialization, FieldsAreFractionStrings) {
    const Json doc = Json::parse(save(fitted_model(13, 3)));
    EXPECT_EQ(doc["format_version"], 1);
    EXPECT_EQ(doc["a"], "1/30");
    EXPECT_EQ(doc["b"][1], "5/1");
    EXPECT_EQ(doc["inner_weights"][0], "1/2");
    EXPECT_EQ(doc["lambda"][0], "1/1");
    EXPECT_EQ(doc["branches"].size(), 5u);
    EXPECT_EQ(doc["branches"][0]["knots"].size(), 3u);
    EXPECT_EQ(doc["meta"]["sample_hash"], "test");
}

TEST(Serialization, TruncatedFile) {
    const std::string text = save(fitted_model(14, 5));
    const std::string err = expect_parse_error(text.substr(0, text.size() / 2));
    EXPECT_EQ(err.rfind("byte ", 0), 0u) << err;
    EXPECT_NE(err.find("malformed"), std::string::npos);
}

TEST(Serialization, FutureVersionAsksForUpgrade) {
    Json doc = Json::parse(save(fitted_model(15, 5)));
    doc["format_version"] = 2;
    const std::string err = expect_parse_error(doc.dump());
    EXPECT_EQ(err.rfind("/format_version", 0), 0u) << err;
    EXPECT_NE(err.find("upgrade knet"), std::string::npos) << err;
}

TEST(Serialization, LocatesBadFields) {
    const Json good = Json::parse(save(fitted_model(16, 5)));

    Json doc = good;
    doc["branches"][2]["knots"][0].erase("g");
    EXPECT_EQ(expect_parse_error(doc.dump()).rfind("/branches/2/knots/0/g |", 0), 0u);

    doc = good;
    doc["lambda"][1] = 0.17;
    EXPECT_EQ(expect_parse_error(doc.dump()).rfind("/lambda/1 |", 0), 0u);

    doc = good;
    doc["inner_weights"][0] = "1/3";
    EXPECT_EQ(expect_parse_error(doc.dump()).rfind("/inner_weights |", 0), 0u);

    doc = good;
    doc["branches"][1]["knots"][0]["y"] = "1/0";
    EXPECT_EQ(expect_parse_error(doc.dump()).rfind("/branches/1/knots/0/y |", 0), 0u);

    doc = good;
    doc["gamma"] = 5;
    EXPECT_NE(expect_parse_error(doc.dump()).find("2d+2"), std::string::npos);

    doc = good;
    doc["branches"].erase(4);
    EXPECT_EQ(expect_parse_error(doc.dump()).rfind("/branches |", 0), 0u);

    EXPECT_THROW(load("[]"), ParseError);
    EXPECT_THROW(load_file("/nonexistent/model.json"), InputError);
}

TEST(Describe, Topology) {
    const KNetModel model = fitted_model(17, 6);
    const TopologyReport report = describe(model);
    EXPECT_EQ(report.widths, (std::array<int, 4>{2, 10, 5, 1}));
    EXPECT_EQ(report.knots_per_branch, (std::vector<std::size_t>(5, 6)));
    const Json j = report.to_json();
    EXPECT_EQ(j["constants"]["a"], "1/30");
    EXPECT_EQ(j["layer_widths"][1], 10);
    const std::string dot = report.to_dot();
    EXPECT_EQ(dot.rfind("digraph knet {", 0), 0u);
    EXPECT_NE(dot.find("z4 -> w"), std::string::npos);
}
