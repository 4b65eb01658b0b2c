#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dampwave/config.hpp"

using namespace dampwave;

namespace {

const char* kMinimal = R"json({
  "version": 1,
  "name": "demo",
  "domain": {"axes": [{"lower": 0, "upper": "pi", "points": 99}]},
  "coefficients": {"a": "-1"}
})json";

const char* kFull = R"json({
  "version": 1,
  "name": "full",
  "seed": 7,
  "domain": {"axes": [{"truncated": true, "radius": 20, "points": 399}]},
  "coefficients": {"a": "if(abs(x) < 1, -1, 1/x^2)", "b": "0", "a_inf": 0, "b_inf": 0,
                   "boundary_fraction": 0.2, "asymptotic_tolerance": 0.05},
  "curves": {"k": 3, "mu_range": [-50, 60], "samples": 21},
  "alpha": {"values": [0.5, 2], "sweep": {"min": 0.2, "max": 8, "tol": 0.005}},
  "solver": {"eigen_tol": 1e-9, "root_tol": 1e-11, "tangency_tol": 1e-7, "match_tol": 1e-6,
             "classification_tol": 1e-3, "dense_budget": 2000},
  "evolution": {"enabled": true, "T": 4, "dt": 0.001, "tail_fraction": 0.4, "initial": "top-eigenvector"},
  "output": {"directory": "results"}
})json";

}  // namespace

TEST(Config, MinimalDefaults) {
    const auto c = parse_config(kMinimal);
    EXPECT_EQ(c.name, "demo");
    ASSERT_EQ(c.axes.size(), 1u);
    EXPECT_NEAR(c.axes[0].upper.value, std::numbers::pi, 1e-15);
    EXPECT_EQ(c.axes[0].upper.expr, "pi");
    EXPECT_EQ(c.coefficients.b, "0");
    EXPECT_FALSE(c.curves.k);
    EXPECT_FALSE(c.curves.mu_lower);
    EXPECT_EQ(c.curves.samples, 41);
    EXPECT_FALSE(c.sweep);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.solver.dense_budget, 4000);
}

TEST(Config, FullParse) {
    const auto c = parse_config(kFull);
    EXPECT_TRUE(c.axes[0].truncated);
    EXPECT_EQ(c.axes[0].radius, 20.0);
    EXPECT_EQ(*c.curves.k, 3);
    EXPECT_EQ(*c.curves.mu_lower, -50.0);
    EXPECT_EQ(c.alphas, (std::vector<double>{0.5, 2}));
    EXPECT_EQ(c.sweep->tol, 0.005);
    EXPECT_EQ(c.evolution.initial, "top-eigenvector");
    EXPECT_EQ(*c.evolution.dt, 0.001);
    EXPECT_EQ(c.output_directory, "results");
    EXPECT_EQ(c.seed, 7u);
    const auto d = c.domain();
    EXPECT_EQ(d.axes[0].lower, -20.0);
}

TEST(Config, RoundTripIsLossless) {
    for (const char* text : {kMinimal, kFull}) {
        const auto c = parse_config(text);
        const auto j = config_to_json(c);
        const auto back = config_from_json(j);
        EXPECT_EQ(back, c);
        EXPECT_EQ(config_to_json(back), j);
        EXPECT_EQ(config_hash(back), config_hash(c));
    }
}

TEST(Config, AutoKeywordsRoundTrip) {
    auto j = Json::parse(kMinimal);
    j["curves"] = {{"k", "auto"}, {"mu_range", "auto"}};
    const auto c = config_from_json(j);
    EXPECT_FALSE(c.curves.k);
    EXPECT_EQ(config_to_json(c)["curves"]["k"], "auto");
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(Config, HashDependsOnContent) {
    auto a = parse_config(kMinimal);
    auto b = a;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, UnknownKeysRejected) {
    for (const char* path : {"/bogus", "/domain/bogus", "/coefficients/c", "/curves/kk", "/solver/tol", "/output/dir"}) {
        auto j = Json::parse(kFull);
        j[Json::json_pointer(path)] = 1;
        try {
            config_from_json(j);
            FAIL() << path;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos) << e.what();
        }
    }
}

TEST(Config, InvalidValuesRejected) {
    const auto bad = [](const std::string& ptr, Json v) {
        auto j = Json::parse(kFull);
        j[Json::json_pointer(ptr)] = v;
        EXPECT_THROW(config_from_json(j), ConfigError) << ptr;
    };
    bad("/version", 2);
    bad("/curves/k", 0);
    bad("/curves/k", "many");
    bad("/curves/mu_range", Json::array({3, 1}));
    bad("/curves/samples", 1);
    bad("/alpha/values", Json::array({1, -1}));
    bad("/alpha/sweep/min", 9);
    bad("/evolution/initial", "zero");
    bad("/evolution/T", 0);
    bad("/coefficients/a", 3);
    bad("/name", Json::array());
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(parse_config(R"({"version": 1})"), ConfigError);
}

TEST(Config, BoundsMustBeConstant) {
    auto j = Json::parse(kMinimal);
    j["domain"]["axes"][0]["upper"] = "2*pi";
    EXPECT_NEAR(config_from_json(j).axes[0].upper.value, 2 * std::numbers::pi, 1e-15);
    j["domain"]["axes"][0]["upper"] = "x + 1";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["domain"]["axes"][0]["upper"] = 3;
    j["domain"]["axes"][0]["radius"] = 3;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, MalformedExpressionNamesToken) {
    auto j = Json::parse(kMinimal);
    j["coefficients"]["a"] = "1 + * x";
    try {
        config_from_json(j);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.token(), "*");
        EXPECT_NE(std::string(e.what()).find("'*'"), std::string::npos);
    }
}
