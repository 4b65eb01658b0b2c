#pragma once

// Scenario configuration: a versioned JSON document, validated strictly
// (unknown keys are errors) and serialised back in normalised form.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dampwave/coefficients.hpp"
#include "dampwave/error.hpp"
#include "dampwave/expression.hpp"
#include "dampwave/grid.hpp"

namespace dampwave {

using Json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

// A domain bound given as a number or as a constant expression ("pi").
struct Bound {
    double value = 0.0;
    std::string expr;

    bool operator==(const Bound&) const = default;
};

struct AxisConfig {
    bool truncated = false;
    Bound lower;
    Bound upper{1.0, ""};
    double radius = 0.0;  // truncated axes
    int points = 0;

    bool operator==(const AxisConfig&) const = default;
};

struct CoefficientConfig {
    std::string a;
    std::string b = "0";
    std::optional<double> a_inf;
    std::optional<double> b_inf;
    std::optional<double> gamma_inf_0;
    double boundary_fraction = 0.1;
    double asymptotic_tolerance = 1e-2;

    bool operator==(const CoefficientConfig&) const = default;
};

struct CurveConfig {
    std::optional<int> k;  // empty: chosen from the alpha list
    std::optional<double> mu_lower;
    std::optional<double> mu_upper;
    int samples = 41;

    bool operator==(const CurveConfig&) const = default;
};

struct SweepConfig {
    double min = 0.1;
    double max = 10.0;
    double tol = 1e-2;

    bool operator==(const SweepConfig&) const = default;
};

struct SolverConfig {
    double eigen_tol = 1e-8;
    double root_tol = 1e-10;
    double tangency_tol = 1e-6;
    double match_tol = 1e-6;
    double classification_tol = 1e-3;
    int dense_budget = 4000;

    bool operator==(const SolverConfig&) const = default;
};

struct EvolutionConfig {
    bool enabled = false;
    double T = 5.0;
    std::optional<double> dt;
    double tail_fraction = 0.5;
    std::string initial = "random";  // or "top-eigenvector"

    bool operator==(const EvolutionConfig&) const = default;
};

struct ScenarioConfig {
    int version = kConfigVersion;
    std::string name;
    std::vector<AxisConfig> axes;
    CoefficientConfig coefficients;
    CurveConfig curves;
    std::vector<double> alphas;
    std::optional<SweepConfig> sweep;
    SolverConfig solver;
    EvolutionConfig evolution;
    std::string output_directory = "out";
    std::uint64_t seed = 1;

    bool operator==(const ScenarioConfig&) const = default;

    DomainDescriptor domain() const {
        DomainDescriptor d;
        for (const auto& a : axes)
            d.axes.push_back(a.truncated ? AxisSpec::truncated_line(a.radius, a.points)
                                         : AxisSpec::interval(a.lower.value, a.upper.value, a.points));
        return d;
    }

    AsymptoticDeclaration declaration() const {
        AsymptoticDeclaration d;
        d.a_inf = coefficients.a_inf;
        d.b_inf = coefficients.b_inf;
        d.gamma_inf_0 = coefficients.gamma_inf_0;
        d.boundary_fraction = coefficients.boundary_fraction;
        d.asymptotic_tolerance = coefficients.asymptotic_tolerance;
        return d;
    }
};

namespace detail {

inline void check_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    }
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& where, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

template <class T>
std::optional<T> get_optional(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return get<T>(j, key, where, T{});
}

inline Bound parse_bound(const Json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), ""};
    if (j.is_string()) {
        const auto e = Expression::parse(j.get<std::string>());
        if (!e.is_constant()) throw ConfigError("'" + where + "' must be a constant expression");
        return {e(0.0), j.get<std::string>()};
    }
    throw ConfigError("'" + where + "' must be a number or a constant expression");
}

inline Json bound_json(const Bound& b) { return b.expr.empty() ? Json(b.value) : Json(b.expr); }

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

inline ScenarioConfig config_from_json(const Json& j) {
    using detail::get;
    using detail::get_optional;
    detail::check_keys(j, "config", {"version", "name", "domain", "coefficients", "curves", "alpha", "solver",
                                     "evolution", "output", "seed"});
    ScenarioConfig c;
    c.version = get<int>(j, "version", "config", kConfigVersion);
    if (c.version != kConfigVersion) throw ConfigError("unsupported config version " + std::to_string(c.version));
    c.name = get<std::string>(j, "name", "config", "");
    c.seed = get<std::uint64_t>(j, "seed", "config", 1);

    if (!j.contains("domain")) throw ConfigError("missing 'domain'");
    const Json& d = j.at("domain");
    detail::check_keys(d, "domain", {"axes"});
    if (!d.contains("axes") || !d.at("axes").is_array()) throw ConfigError("'domain.axes' must be an array");
    for (std::size_t i = 0; i < d.at("axes").size(); ++i) {
        const Json& a = d.at("axes")[i];
        const std::string w = "domain.axes[" + std::to_string(i) + "]";
        detail::check_keys(a, w, {"lower", "upper", "points", "truncated", "radius"});
        AxisConfig ax;
        ax.truncated = get<bool>(a, "truncated", w, false);
        if (!a.contains("points")) throw ConfigError("missing '" + w + ".points'");
        ax.points = get<int>(a, "points", w, 0);
        if (ax.truncated) {
            if (a.contains("lower") || a.contains("upper")) throw ConfigError("'" + w + "': truncated axes take 'radius', not bounds");
            if (!a.contains("radius")) throw ConfigError("missing '" + w + ".radius'");
            ax.radius = get<double>(a, "radius", w, 0.0);
            ax.lower = {-ax.radius, ""};
            ax.upper = {ax.radius, ""};
        } else {
            if (a.contains("radius")) throw ConfigError("'" + w + "': 'radius' needs \"truncated\": true");
            if (!a.contains("lower") || !a.contains("upper")) throw ConfigError("'" + w + "' needs 'lower' and 'upper'");
            ax.lower = detail::parse_bound(a.at("lower"), w + ".lower");
            ax.upper = detail::parse_bound(a.at("upper"), w + ".upper");
        }
        c.axes.push_back(ax);
    }

    if (!j.contains("coefficients")) throw ConfigError("missing 'coefficients'");
    const Json& co = j.at("coefficients");
    detail::check_keys(co, "coefficients",
                       {"a", "b", "a_inf", "b_inf", "gamma_inf_0", "boundary_fraction", "asymptotic_tolerance"});
    if (!co.contains("a")) throw ConfigError("missing 'coefficients.a'");
    c.coefficients.a = get<std::string>(co, "a", "coefficients", "");
    c.coefficients.b = get<std::string>(co, "b", "coefficients", "0");
    c.coefficients.a_inf = get_optional<double>(co, "a_inf", "coefficients");
    c.coefficients.b_inf = get_optional<double>(co, "b_inf", "coefficients");
    c.coefficients.gamma_inf_0 = get_optional<double>(co, "gamma_inf_0", "coefficients");
    c.coefficients.boundary_fraction = get<double>(co, "boundary_fraction", "coefficients", 0.1);
    c.coefficients.asymptotic_tolerance = get<double>(co, "asymptotic_tolerance", "coefficients", 1e-2);
    // Parse now so that malformed expressions fail as config errors.
    Expression::parse(c.coefficients.a);
    Expression::parse(c.coefficients.b);

    if (j.contains("curves")) {
        const Json& cu = j.at("curves");
        detail::check_keys(cu, "curves", {"k", "mu_range", "samples"});
        if (cu.contains("k") && cu.at("k").is_string()) {
            if (cu.at("k").get<std::string>() != "auto") throw ConfigError("'curves.k' must be an integer or \"auto\"");
        } else {
            c.curves.k = get_optional<int>(cu, "k", "curves");
        }
        c.curves.samples = get<int>(cu, "samples", "curves", 41);
        const bool auto_range = cu.contains("mu_range") && cu.at("mu_range") == Json("auto");
        if (cu.contains("mu_range") && !cu.at("mu_range").is_null() && !auto_range) {
            const Json& r = cu.at("mu_range");
            if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
                throw ConfigError("'curves.mu_range' must be [lower, upper] or \"auto\"");
            c.curves.mu_lower = r[0].get<double>();
            c.curves.mu_upper = r[1].get<double>();
            if (!(*c.curves.mu_upper > *c.curves.mu_lower)) throw ConfigError("'curves.mu_range' must have upper > lower");
        }
        if (c.curves.k && *c.curves.k < 1) throw ConfigError("'curves.k' must be at least 1");
        if (c.curves.samples < 2) throw ConfigError("'curves.samples' must be at least 2");
    }

    if (j.contains("alpha")) {
        const Json& al = j.at("alpha");
        detail::check_keys(al, "alpha", {"values", "sweep"});
        c.alphas = get<std::vector<double>>(al, "values", "alpha", {});
        for (double a : c.alphas)
            if (!(a > 0.0)) throw ConfigError("'alpha.values' must be positive");
        if (al.contains("sweep") && !al.at("sweep").is_null()) {
            const Json& s = al.at("sweep");
            detail::check_keys(s, "alpha.sweep", {"min", "max", "tol"});
            SweepConfig sw;
            sw.min = get<double>(s, "min", "alpha.sweep", sw.min);
            sw.max = get<double>(s, "max", "alpha.sweep", sw.max);
            sw.tol = get<double>(s, "tol", "alpha.sweep", sw.tol);
            if (!(sw.min > 0.0 && sw.max > sw.min && sw.tol > 0.0)) throw ConfigError("'alpha.sweep' needs 0 < min < max and tol > 0");
            c.sweep = sw;
        }
    }

    if (j.contains("solver")) {
        const Json& s = j.at("solver");
        detail::check_keys(s, "solver", {"eigen_tol", "root_tol", "tangency_tol", "match_tol", "classification_tol", "dense_budget"});
        auto& o = c.solver;
        o.eigen_tol = get<double>(s, "eigen_tol", "solver", o.eigen_tol);
        o.root_tol = get<double>(s, "root_tol", "solver", o.root_tol);
        o.tangency_tol = get<double>(s, "tangency_tol", "solver", o.tangency_tol);
        o.match_tol = get<double>(s, "match_tol", "solver", o.match_tol);
        o.classification_tol = get<double>(s, "classification_tol", "solver", o.classification_tol);
        o.dense_budget = get<int>(s, "dense_budget", "solver", o.dense_budget);
    }

    if (j.contains("evolution")) {
        const Json& e = j.at("evolution");
        detail::check_keys(e, "evolution", {"enabled", "T", "dt", "tail_fraction", "initial"});
        auto& o = c.evolution;
        o.enabled = get<bool>(e, "enabled", "evolution", o.enabled);
        o.T = get<double>(e, "T", "evolution", o.T);
        o.dt = get_optional<double>(e, "dt", "evolution");
        o.tail_fraction = get<double>(e, "tail_fraction", "evolution", o.tail_fraction);
        o.initial = get<std::string>(e, "initial", "evolution", o.initial);
        if (o.initial != "random" && o.initial != "top-eigenvector")
            throw ConfigError("'evolution.initial' must be \"random\" or \"top-eigenvector\"");
        if (!(o.T > 0.0) || (o.dt && !(*o.dt > 0.0))) throw ConfigError("'evolution' needs T > 0 and dt > 0");
    }

    if (j.contains("output")) {
        const Json& o = j.at("output");
        detail::check_keys(o, "output", {"directory"});
        c.output_directory = get<std::string>(o, "directory", "output", c.output_directory);
    }
    return c;
}

inline Json config_to_json(const ScenarioConfig& c) {
    Json axes = Json::array();
    for (const auto& a : c.axes) {
        if (a.truncated) axes.push_back({{"truncated", true}, {"radius", a.radius}, {"points", a.points}});
        else axes.push_back({{"lower", detail::bound_json(a.lower)}, {"upper", detail::bound_json(a.upper)}, {"points", a.points}});
    }
    Json j;
    j["version"] = c.version;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["domain"] = {{"axes", axes}};
    const auto& co = c.coefficients;
    j["coefficients"] = {{"a", co.a},
                         {"b", co.b},
                         {"a_inf", detail::optional_json(co.a_inf)},
                         {"b_inf", detail::optional_json(co.b_inf)},
                         {"gamma_inf_0", detail::optional_json(co.gamma_inf_0)},
                         {"boundary_fraction", co.boundary_fraction},
                         {"asymptotic_tolerance", co.asymptotic_tolerance}};
    j["curves"] = {{"k", c.curves.k ? Json(*c.curves.k) : Json("auto")},
                   {"mu_range", c.curves.mu_lower ? Json::array({*c.curves.mu_lower, *c.curves.mu_upper}) : Json("auto")},
                   {"samples", c.curves.samples}};
    j["alpha"] = {{"values", c.alphas},
                  {"sweep", c.sweep ? Json{{"min", c.sweep->min}, {"max", c.sweep->max}, {"tol", c.sweep->tol}} : Json(nullptr)}};
    const auto& s = c.solver;
    j["solver"] = {{"eigen_tol", s.eigen_tol},           {"root_tol", s.root_tol},
                   {"tangency_tol", s.tangency_tol},     {"match_tol", s.match_tol},
                   {"classification_tol", s.classification_tol}, {"dense_budget", s.dense_budget}};
    const auto& e = c.evolution;
    j["evolution"] = {{"enabled", e.enabled}, {"T", e.T}, {"dt", detail::optional_json(e.dt)},
                      {"tail_fraction", e.tail_fraction}, {"initial", e.initial}};
    j["output"] = {{"directory", c.output_directory}};
    return j;
}

inline ScenarioConfig parse_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// FNV-1a over the normalised JSON text.
inline std::string config_hash(const ScenarioConfig& c) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dampwave
