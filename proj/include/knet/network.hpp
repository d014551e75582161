#pragma once

// The assembled network
//
//     input x_1..x_d
//     y_{q,p} = phi(x_p + a q)                      d(2d+1) neurons
//     z_q     = g(sum_p lambda_p y_{q,p} + b_q)     2d+1 neurons
//     w       = sum_q z_q
//
// with its JSON model format. Every rational in the file is a "p/q" string,
// so save/load round trips are exact.

#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "knet/errors.hpp"
#include "knet/hash.hpp"
#include "knet/inner.hpp"
#include "knet/outer.hpp"
#include "knet/rational.hpp"

namespace knet {

inline constexpr int kFormatVersion = 1;

struct ModelMeta {
    std::string fit_mode = "exact";
    int depth = kDefaultDepth;
    std::string sample_hash;
    int format_version = kFormatVersion;

    friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

class KNetModel {
public:
    KNetModel(InnerSpec inner, HashParams params, OuterFunction outer, ModelMeta meta)
        : inner_(std::move(inner)), params_(std::move(params)), outer_(std::move(outer)), meta_(std::move(meta)) {}

    const InnerSpec& inner() const noexcept { return inner_; }
    const HashParams& params() const noexcept { return params_; }
    const OuterFunction& outer() const noexcept { return outer_; }
    const ModelMeta& meta() const noexcept { return meta_; }
    int d() const noexcept { return params_.d; }

    // (d, d(2d+1), 2d+1, 1)
    std::array<int, 4> layer_widths() const {
        const int d = params_.d;
        return {d, d * (2 * d + 1), 2 * d + 1, 1};
    }

private:
    InnerSpec inner_;
    HashParams params_;
    OuterFunction outer_;
    ModelMeta meta_;
};

inline KNetModel assemble(InnerSpec inner, HashParams params, OuterFunction outer, ModelMeta meta = {}) {
    params.validate();
    if (inner.base() != params.gamma) {
        throw ParameterError("inner.base = " + std::to_string(inner.base()) + " differs from params.gamma = " +
                             std::to_string(params.gamma));
    }
    if (outer.branch_count() != static_cast<std::size_t>(params.branch_count())) {
        throw ParameterError("outer.branches has " + std::to_string(outer.branch_count()) + " entries, expected 2d+1 = " +
                             std::to_string(params.branch_count()));
    }
    if (outer.interval_lows() != params.b) {
        throw ParameterError("outer.interval_lows differ from params.b");
    }
    if (outer.interval_width() != params.interval_width()) {
        throw ParameterError("outer.interval_width differs from 2d");
    }
    if (meta.format_version != kFormatVersion) {
        throw ParameterError("meta.format_version " + std::to_string(meta.format_version) + " is not supported");
    }
    if (meta.depth < 1) {
        throw ParameterError("meta.depth must be at least 1");
    }
    return KNetModel(std::move(inner), std::move(params), std::move(outer), std::move(meta));
}

struct EvalResult {
    Rational w;
    // |w_ideal - w| <= error_bound, where w_ideal feeds the untruncated
    // Psi_q values into the same g.
    Rational error_bound;
    std::vector<Rational> branch_inputs;   // Psi_q(x) at the evaluation depth
    std::vector<Rational> branch_outputs;  // z_q = g(Psi_q(x))
};

struct FastEvalResult {
    double w = 0.0;
    double error_bound = 0.0;
};

inline EvalResult eval(const KNetModel& model, std::span<const Rational> x, int depth) {
    EvalResult out;
    out.w = 0;
    out.error_bound = 0;
    for (int q = 0; q < model.params().branch_count(); ++q) {
        const BranchValue psi = psi_eval(model.params(), model.inner(), x, q, depth);
        Rational z = model.outer().eval(psi.value);
        out.w += z;
        if (psi.error_bound != 0) out.error_bound += model.outer().variation(psi.value, psi.error_bound);
        out.branch_inputs.push_back(psi.value);
        out.branch_outputs.push_back(std::move(z));
    }
    return out;
}

inline EvalResult eval(const KNetModel& model, std::span<const Rational> x) { return eval(model, x, model.meta().depth); }

// Floating-point path. Digits of x are extracted exactly; phi, Psi and g are
// accumulated in double precision.
inline FastEvalResult eval_fast(const KNetModel& model, std::span<const Rational> x, int depth) {
    const HashParams& params = model.params();
    const InnerSpec& inner = model.inner();
    detail::check_point(params, x);
    FastEvalResult out;
    for (int q = 0; q < params.branch_count(); ++q) {
        const Rational shift = params.a * q;
        double psi = to_double(params.b[static_cast<std::size_t>(q)]);
        double bound = 0.0;
        for (std::size_t p = 0; p < x.size(); ++p) {
            const InnerValue phi = phi_eval(inner, x[p] + shift, depth);
            const double lambda = to_double(params.lambda[p]);
            const double phi_value = phi_fast(inner, x[p] + shift, depth);
            psi += lambda * phi_value;
            bound += lambda * to_double(phi.error_bound) +
                     to_double(params.lambda_tail[p]) * (phi_value + to_double(phi.error_bound));
        }
        out.w += model.outer().eval_fast(psi);
        if (bound > 0.0) out.error_bound += model.outer().variation_fast(psi, bound);
    }
    return out;
}

inline FastEvalResult eval_fast(const KNetModel& model, std::span<const Rational> x) {
    return eval_fast(model, x, model.meta().depth);
}

namespace detail {

template <typename Result, typename Fn>
std::vector<Result> batch_apply(std::span<const Point> points, Fn&& fn) {
    std::vector<Result> results(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        try {
            results[i] = fn(points[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const DomainError& e) {
            throw DomainError("point " + std::to_string(i) + ": " + e.what());
        }
    }
    return results;
}

}  // namespace detail

// Elementwise eval; output order follows the input. The first failing point
// (lowest index) is reported.
inline std::vector<EvalResult> eval_batch(const KNetModel& model, std::span<const Point> points, int depth) {
    return detail::batch_apply<EvalResult>(points, [&](const Point& x) { return eval(model, x, depth); });
}

inline std::vector<FastEvalResult> eval_batch_fast(const KNetModel& model, std::span<const Point> points, int depth) {
    return detail::batch_apply<FastEvalResult>(points, [&](const Point& x) { return eval_fast(model, x, depth); });
}

// ---------------------------------------------------------------------------
// Model file

using Json = nlohmann::ordered_json;

namespace detail {

inline Json fraction_array(const std::vector<Rational>& values) {
    Json out = Json::array();
    for (const auto& v : values) out.push_back(to_fraction_string(v));
    return out;
}

}  // namespace detail

inline Json model_to_json(const KNetModel& model) {
    const HashParams& params = model.params();
    Json doc;
    doc["format_version"] = kFormatVersion;
    doc["d"] = params.d;
    doc["gamma"] = params.gamma;
    doc["a"] = to_fraction_string(params.a);
    doc["inner_weights"] = detail::fraction_array(model.inner().weights());
    doc["lambda"] = detail::fraction_array(params.lambda);
    doc["lambda_tail"] = detail::fraction_array(params.lambda_tail);
    doc["series_terms"] = params.series_terms;
    doc["series_tolerance"] = to_fraction_string(params.series_tolerance);
    doc["b"] = detail::fraction_array(params.b);
    Json branches = Json::array();
    for (std::size_t q = 0; q < model.outer().branch_count(); ++q) {
        Json knots = Json::array();
        for (const auto& knot : model.outer().branch(q)) {
            knots.push_back(Json{{"y", to_fraction_string(knot.y)}, {"g", to_fraction_string(knot.g)}});
        }
        branches.push_back(Json{{"q", q}, {"knots", std::move(knots)}});
    }
    doc["branches"] = std::move(branches);
    const ModelMeta& meta = model.meta();
    doc["meta"] = Json{{"fit_mode", meta.fit_mode},
                       {"depth", meta.depth},
                       {"sample_hash", meta.sample_hash},
                       {"format_version", meta.format_version}};
    return doc;
}

inline std::string save(const KNetModel& model) { return model_to_json(model).dump(1) + "\n"; }

inline void save(const KNetModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << save(model);
    if (!out) throw InputError("failed writing " + path);
}

namespace detail {

class ModelReader {
public:
    const Json& field(const Json& object, const std::string& key, const std::string& where) const {
        if (!object.is_object()) throw ParseError(where, "expected an object");
        auto it = object.find(key);
        if (it == object.end()) throw ParseError(where + "/" + key, "missing field");
        return *it;
    }

    int integer(const Json& value, const std::string& where) const {
        if (!value.is_number_integer()) throw ParseError(where, "expected an integer");
        return value.get<int>();
    }

    Rational fraction(const Json& value, const std::string& where) const {
        if (!value.is_string()) throw ParseError(where, "expected a \"p/q\" string");
        const auto& text = value.get_ref<const std::string&>();
        if (text.find('/') == std::string::npos) throw ParseError(where, "expected a \"p/q\" string, got '" + text + "'");
        try {
            return parse_rational(text);
        } catch (const DomainError& e) {
            throw ParseError(where, e.what());
        }
    }

    std::vector<Rational> fractions(const Json& value, const std::string& where) const {
        if (!value.is_array()) throw ParseError(where, "expected an array");
        std::vector<Rational> out;
        for (std::size_t i = 0; i < value.size(); ++i) out.push_back(fraction(value[i], where + "/" + std::to_string(i)));
        return out;
    }
};

}  // namespace detail

// Parses and validates a model document. Every failure is a ParseError whose
// location is a JSON pointer (or a byte offset for syntax errors).
inline KNetModel load(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), "malformed JSON document");
    }
    const detail::ModelReader r;
    if (!doc.is_object()) throw ParseError("", "model document must be a JSON object");

    const int version = r.integer(r.field(doc, "format_version", ""), "/format_version");
    if (version > kFormatVersion) {
        throw ParseError("/format_version", "format version " + std::to_string(version) +
                                                " is newer than this build supports (" +
                                                std::to_string(kFormatVersion) + "); upgrade knet to read it");
    }
    if (version != kFormatVersion) {
        throw ParseError("/format_version", "unsupported format version " + std::to_string(version));
    }

    HashParams params;
    params.d = r.integer(r.field(doc, "d", ""), "/d");
    params.gamma = r.integer(r.field(doc, "gamma", ""), "/gamma");
    params.a = r.fraction(r.field(doc, "a", ""), "/a");
    params.lambda = r.fractions(r.field(doc, "lambda", ""), "/lambda");
    params.lambda_tail = r.fractions(r.field(doc, "lambda_tail", ""), "/lambda_tail");
    params.b = r.fractions(r.field(doc, "b", ""), "/b");
    params.series_tolerance = r.fraction(r.field(doc, "series_tolerance", ""), "/series_tolerance");
    const Json& terms = r.field(doc, "series_terms", "");
    if (!terms.is_array()) throw ParseError("/series_terms", "expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        params.series_terms.push_back(r.integer(terms[i], "/series_terms/" + std::to_string(i)));
    }
    try {
        params.validate();
    } catch (const ParameterError& e) {
        throw ParseError("", e.what());
    }
    if (params.series_terms.size() != params.lambda.size()) {
        throw ParseError("/series_terms", "expected one entry per lambda");
    }

    std::vector<Rational> weights = r.fractions(r.field(doc, "inner_weights", ""), "/inner_weights");
    std::optional<InnerSpec> inner;
    try {
        inner.emplace(params.gamma, std::move(weights));
    } catch (const ParameterError& e) {
        throw ParseError("/inner_weights", e.what());
    }

    const Json& branches_json = r.field(doc, "branches", "");
    if (!branches_json.is_array()) throw ParseError("/branches", "expected an array");
    if (branches_json.size() != static_cast<std::size_t>(params.branch_count())) {
        throw ParseError("/branches", "expected " + std::to_string(params.branch_count()) + " branches, found " +
                                          std::to_string(branches_json.size()));
    }
    std::vector<std::vector<Knot>> branches;
    for (std::size_t q = 0; q < branches_json.size(); ++q) {
        const std::string where = "/branches/" + std::to_string(q);
        const Json& branch = branches_json[q];
        if (r.integer(r.field(branch, "q", where), where + "/q") != static_cast<int>(q)) {
            throw ParseError(where + "/q", "branches must be listed in order q = 0..2d");
        }
        const Json& knots_json = r.field(branch, "knots", where);
        if (!knots_json.is_array()) throw ParseError(where + "/knots", "expected an array");
        std::vector<Knot> knots;
        for (std::size_t l = 0; l < knots_json.size(); ++l) {
            const std::string at = where + "/knots/" + std::to_string(l);
            knots.push_back({r.fraction(r.field(knots_json[l], "y", at), at + "/y"),
                             r.fraction(r.field(knots_json[l], "g", at), at + "/g")});
        }
        branches.push_back(std::move(knots));
    }
    std::optional<OuterFunction> outer;
    try {
        outer.emplace(params.b, params.interval_width(), std::move(branches));
    } catch (const ParameterError& e) {
        throw ParseError("/branches", e.what());
    }

    const Json& meta_json = r.field(doc, "meta", "");
    ModelMeta meta;
    const Json& mode = r.field(meta_json, "fit_mode", "/meta");
    const Json& hash = r.field(meta_json, "sample_hash", "/meta");
    if (!mode.is_string()) throw ParseError("/meta/fit_mode", "expected a string");
    if (!hash.is_string()) throw ParseError("/meta/sample_hash", "expected a string");
    meta.fit_mode = mode.get<std::string>();
    meta.sample_hash = hash.get<std::string>();
    meta.depth = r.integer(r.field(meta_json, "depth", "/meta"), "/meta/depth");
    meta.format_version = r.integer(r.field(meta_json, "format_version", "/meta"), "/meta/format_version");
    if (meta.format_version != version) {
        throw ParseError("/meta/format_version", "disagrees with /format_version");
    }

    try {
        return assemble(std::move(*inner), std::move(params), std::move(*outer), std::move(meta));
    } catch (const ParameterError& e) {
        throw ParseError("", e.what());
    }
}

inline KNetModel load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load(text);
}

// ---------------------------------------------------------------------------
// Topology

struct TopologyReport {
    std::array<int, 4> widths{};
    int d = 0;
    int gamma = 0;
    Rational a;
    std::vector<Rational> lambda;
    std::vector<Rational> lambda_tail;
    std::vector<Rational> b;
    std::vector<std::size_t> knots_per_branch;

    Json to_json() const {
        Json out;
        out["layer_widths"] = widths;
        out["d"] = d;
        out["gamma"] = gamma;
        Json constants;
        constants["a"] = to_fraction_string(a);
        constants["lambda"] = detail::fraction_array(lambda);
        constants["lambda_tail"] = detail::fraction_array(lambda_tail);
        constants["b"] = detail::fraction_array(b);
        out["constants"] = std::move(constants);
        out["knots_per_branch"] = knots_per_branch;
        return out;
    }

    // Graphviz description of the four layers and their connections.
    std::string to_dot() const {
        std::ostringstream os;
        os << "digraph knet {\n  rankdir=LR;\n";
        for (int p = 1; p <= d; ++p) os << "  x" << p << " [shape=circle];\n";
        for (int q = 0; q <= 2 * d; ++q) {
            for (int p = 1; p <= d; ++p) {
                os << "  y" << q << "_" << p << " [label=\"phi(x" << p << "+" << q << "a)\"];\n";
                os << "  x" << p << " -> y" << q << "_" << p << ";\n";
                os << "  y" << q << "_" << p << " -> z" << q << " [label=\"lambda" << p << "\"];\n";
            }
            os << "  z" << q << " [label=\"g (branch " << q << ", b=" << b[static_cast<std::size_t>(q)].get_str() << ")\"];\n";
            os << "  z" << q << " -> w;\n";
        }
        os << "  w [shape=doublecircle];\n}\n";
        return os.str();
    }
};

inline TopologyReport describe(const KNetModel& model) {
    TopologyReport report;
    report.widths = model.layer_widths();
    report.d = model.params().d;
    report.gamma = model.params().gamma;
    report.a = model.params().a;
    report.lambda = model.params().lambda;
    report.lambda_tail = model.params().lambda_tail;
    report.b = model.params().b;
    for (std::size_t q = 0; q < model.outer().branch_count(); ++q) {
        report.knots_per_branch.push_back(model.outer().branch(q).size());
    }
    return report;
}

}  // namespace knet
