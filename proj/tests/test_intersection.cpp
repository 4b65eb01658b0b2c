#include <cmath>
#include <memory>
#include <numbers>

#include <gtest/gtest.h>

#include "dampwave/threshold.hpp"

using namespace dampwave;
constexpr double pi = std::numbers::pi;

namespace {

std::shared_ptr<const CurveSampler> sampler(const Grid& g, const std::string& a, const std::string& b, int k,
                                            AsymptoticDeclaration decl = {}) {
    CurveSamplerOptions o;
    o.k = k;
    return std::make_shared<const CurveSampler>(g, sample_coefficients(g, a, b, decl), o);
}

Grid interval(int n) { return build_grid({{AxisSpec::interval(0, pi, n)}}); }

std::vector<IntersectionRecord> of_curve(const std::vector<IntersectionRecord>& all, int n) {
    std::vector<IntersectionRecord> out;
    for (const auto& r : all)
        if (r.curve == n) out.push_back(r);
    return out;
}

}  // namespace

class ConstantDamping : public ::testing::Test {
protected:
    void SetUp() override {
        s = sampler(interval(199), "1", "0", 3);
        table = sample_eigencurves(s, {-120, 120}, 49);
        g1 = table.gamma(0, *table.index_of(0.0));
    }
    std::shared_ptr<const CurveSampler> s;
    EigencurveTable table;
    double g1 = 0.0;
};

TEST_F(ConstantDamping, TwoTransversalRootsMatchQuadratic) {
    const double alpha = 3.0;
    const auto recs = of_curve(intersect_all(table, alpha), 0);
    ASSERT_EQ(recs.size(), 2u);
    // mu^2 / 9 + mu + g1 = 0
    const double d = std::sqrt(1.0 - 4.0 * g1 / 9.0);
    const double r1 = 9.0 * (-1.0 - d) / 2.0;
    const double r2 = 9.0 * (-1.0 + d) / 2.0;
    EXPECT_NEAR(recs[0].mu_star, r1, 1e-8);
    EXPECT_NEAR(recs[1].mu_star, r2, 1e-8);
    EXPECT_NEAR(recs[0].mu_star, -7.8541, 2e-3);
    EXPECT_NEAR(recs[1].mu_star, -1.1459, 2e-3);
    for (const auto& r : recs) {
        EXPECT_EQ(r.kind, IntersectionKind::Transversal);
        EXPECT_LE(r.residual, 1e-10);
        EXPECT_DOUBLE_EQ(r.lambda, r.mu_star / alpha);
        EXPECT_LT(r.lambda, 0.0);
        EXPECT_LE(r.bracket_lo, r.mu_star);
        EXPECT_GE(r.bracket_hi, r.mu_star);
        EXPECT_EQ(r.classification, SpectralClass::Discrete);
    }
}

TEST_F(ConstantDamping, NoRootBelowDiscriminant) {
    EXPECT_TRUE(of_curve(intersect_all(table, 1.0), 0).empty());
}

TEST_F(ConstantDamping, DoubleRootIsTangency) {
    const double alpha = 2.0 * std::sqrt(g1);
    const auto recs = of_curve(intersect_all(table, alpha), 0);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].kind, IntersectionKind::Tangency);
    EXPECT_EQ(recs[0].multiplicity(), 2);
    EXPECT_NEAR(recs[0].mu_star, -2.0 * g1, 1e-3);
    EXPECT_NEAR(recs[0].lambda, -1.0, 1e-3);
    EXPECT_LT(recs[0].residual, 1e-6);
}

TEST_F(ConstantDamping, AllCurvesAgreeWithClosedForm) {
    for (double alpha : {0.5, 2.5, 4.5, 7.0}) {
        const auto recs = intersect_all(table, alpha);
        for (int n = 0; n < 3; ++n) {
            const double g = table.gamma(n, *table.index_of(0.0));
            const double disc = 1.0 - 4.0 * g / (alpha * alpha);
            const auto rn = of_curve(recs, n);
            if (disc < 0.0) {
                EXPECT_TRUE(rn.empty());
                continue;
            }
            ASSERT_EQ(rn.size(), 2u) << "alpha " << alpha << " curve " << n;
            EXPECT_NEAR(rn[0].mu_star, alpha * alpha * (-1.0 - std::sqrt(disc)) / 2.0, 1e-8);
            EXPECT_NEAR(rn[1].mu_star, alpha * alpha * (-1.0 + std::sqrt(disc)) / 2.0, 1e-8);
        }
    }
}

TEST_F(ConstantDamping, OutOfRangeWarning) {
    const auto narrow = sample_eigencurves(s, {-2, 2}, 9);
    const auto recs = of_curve(intersect_all(narrow, 3.0), 0);
    bool warned = false;
    for (const auto& r : recs) {
        if (!r.out_of_range()) continue;
        warned = true;
        EXPECT_DOUBLE_EQ(r.mu_star, -2.0);
        EXPECT_LE(r.bracket_lo, -7.85);
    }
    EXPECT_TRUE(warned);
}

TEST_F(ConstantDamping, AlphaMustBePositive) {
    EXPECT_THROW(intersect_all(table, 0.0), DomainError);
    EXPECT_THROW(intersect_all(table, -1.0), DomainError);
}

TEST(Intersection, SignChangingRootsAreZerosOfF) {
    const auto s = sampler(interval(150), "sign(x - pi/2) - 0.2", "1 + x", 4);
    const auto t = sample_eigencurves(s, {-400, 400}, 81);
    for (double alpha : {2.0, 5.0, 9.0}) {
        const auto set = intersect(t, alpha);
        EXPECT_EQ(set.uncertified, 0);
        for (const auto& r : set.records) {
            if (r.out_of_range()) continue;
            const double f = s->curve_value(r.curve, r.mu_star) + r.mu_star * r.mu_star / (alpha * alpha);
            EXPECT_LE(std::abs(f), r.kind == IntersectionKind::Tangency ? 1e-6 : 1e-10);
            EXPECT_EQ(r.lambda > 0, r.mu_star > 0);
        }
    }
}

TEST(Intersection, RefinementFindsNarrowDip) {
    // Coarse samples straddle two close roots of curve 1; the Lipschitz
    // certificate forces refinement that finds both.
    const auto s = sampler(interval(100), "-1", "0", 1);
    const auto t = sample_eigencurves(s, {-10, 10}, 3);
    const double g = t.gamma(0, *t.index_of(0.0));
    const double alpha = 2.0 * std::sqrt(g) * 1.01;
    const auto recs = of_curve(intersect_all(t, alpha), 0);
    ASSERT_EQ(recs.size(), 2u);
    const double disc = 1.0 - 4.0 * g / (alpha * alpha);
    EXPECT_NEAR(recs[0].mu_star, alpha * alpha * (1.0 - std::sqrt(disc)) / 2.0, 1e-8);
    EXPECT_NEAR(recs[1].mu_star, alpha * alpha * (1.0 + std::sqrt(disc)) / 2.0, 1e-8);
}

TEST(Intersection, LinearEssentialRowGivesIntervalEndpoints) {
    AsymptoticDeclaration decl;
    decl.a_inf = -1.0;
    const auto g = build_grid({{AxisSpec::truncated_line(20.0, 399)}});
    const auto s = sampler(g, "-1 + 2*exp(-x^2)", "0", 2, decl);
    const auto t = sample_eigencurves(s, {-20, 20}, 11);
    std::vector<IntersectionRecord> ess;
    for (const auto& r : intersect_all(t, 2.0))
        if (r.essential()) ess.push_back(r);
    ASSERT_EQ(ess.size(), 2u);
    EXPECT_NEAR(ess[0].lambda, 0.0, 1e-3);
    EXPECT_NEAR(ess[1].lambda, 2.0, 1e-3);
    for (const auto& r : ess) {
        EXPECT_EQ(r.kind, IntersectionKind::EssentialEndpoint);
        EXPECT_NE(r.note.find("essential (sufficient criterion)"), std::string::npos);
    }
}

TEST(EssentialInterval, ClosedForm) {
    auto i1 = essential_interval(0.0, 1.0, 2.0);
    ASSERT_TRUE(i1);
    EXPECT_DOUBLE_EQ(i1->lower, -2.0);
    EXPECT_DOUBLE_EQ(i1->upper, 0.0);
    EXPECT_DOUBLE_EQ(i1->delta, 4.0);
    auto i2 = essential_interval(0.0, -1.0, 2.0);
    ASSERT_TRUE(i2);
    EXPECT_DOUBLE_EQ(i2->lower, 0.0);
    EXPECT_DOUBLE_EQ(i2->upper, 2.0);
    EXPECT_FALSE(essential_interval(1.0, 0.0, 3.0));
    EXPECT_THROW(essential_interval(0.0, 1.0, 0.0), DomainError);
}

TEST(EssentialInterval, EndpointsAreRoots) {
    for (double g : {-2.0, 0.0, 0.3}) {
        for (double a : {-1.5, 0.7}) {
            for (double alpha : {0.5, 3.0, 10.0}) {
                const auto iv = essential_interval(g, a, alpha);
                if (!iv) {
                    EXPECT_LT(alpha * alpha * a * a - 4 * g, 0.0);
                    continue;
                }
                for (double x : {iv->lower, iv->upper}) {
                    const double scale = x * x + std::abs(alpha * a * x) + std::abs(g) + 1.0;
                    EXPECT_LE(std::abs(x * x + alpha * a * x + g), 4e-16 * scale);
                }
            }
        }
    }
}
