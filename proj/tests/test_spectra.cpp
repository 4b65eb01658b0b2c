#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dampwave/spectra.hpp"

using namespace dampwave;
constexpr double pi = std::numbers::pi;

namespace {

Grid interval(double lo, double hi, int n) { return build_grid({{AxisSpec::interval(lo, hi, n)}}); }
Grid line(double r, int n) { return build_grid({{AxisSpec::truncated_line(r, n)}}); }

std::vector<double> dense_lowest(const SymmetricOperator& op, int k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.matrix()), Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + k};
}

}  // namespace

TEST(LowestEigenvalues, DirichletIntervalGivesSquares) {
    const auto g = interval(0, pi, 999);
    const auto c = sample_coefficients(g, "0", "0");
    const auto s = lowest_eigenvalues(assemble_schrodinger(g, c, 0.0), 4);
    ASSERT_EQ(s.eigenvalues.size(), 4u);
    for (int n = 1; n <= 4; ++n) EXPECT_NEAR(s.eigenvalues[static_cast<std::size_t>(n - 1)], n * n, 2e-4 * n * n * n * n);
    EXPECT_LE(s.max_residual(), 1e-8);
    EXPECT_EQ(s.method, "tridiagonal-sturm-bisection");
}

TEST(LowestEigenvalues, AgreesWithDenseOracle) {
    const auto g = interval(0, 3, 300);
    const auto c = sample_coefficients(g, "sign(x - 1.2) + 0.3*sin(5*x)", "x^2");
    for (double mu : {-40.0, 0.0, 25.0}) {
        const auto op = assemble_schrodinger(g, c, mu);
        const auto s = lowest_eigenvalues(op, 6);
        const auto ref = dense_lowest(op, 6);
        for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(s.eigenvalues[j], ref[j], 1e-9 * std::max(1.0, std::abs(ref[j])));
    }
}

TEST(LowestEigenvalues, ShiftLawForConstantDamping) {
    const auto g = interval(0, pi, 400);
    const auto c = sample_coefficients(g, "-0.7", "1 + x");
    const auto base = lowest_eigenvalues(assemble_schrodinger(g, c, 0.0), 5);
    for (double mu : {-12.0, 3.5, 40.0}) {
        const auto s = lowest_eigenvalues(assemble_schrodinger(g, c, mu), 5);
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(s.eigenvalues[j], base.eigenvalues[j] - 0.7 * mu, 1e-8);
    }
}

TEST(LowestEigenvalues, HarmonicOscillatorRichardson) {
    // Same operator at h and h/2; the O(h^2) error is extrapolated away.
    auto gamma = [](int n) {
        const auto g = line(8.0, n);
        const auto c = sample_coefficients(g, "0", "x^2");
        return lowest_eigenvalues(assemble_schrodinger(g, c, 0.0), 3).eigenvalues;
    };
    const auto coarse = gamma(399);
    const auto fine = gamma(799);
    for (int n = 1; n <= 3; ++n) {
        const auto j = static_cast<std::size_t>(n - 1);
        const double rich = (4.0 * fine[j] - coarse[j]) / 3.0;
        EXPECT_NEAR(fine[j], 2 * n - 1, 1e-2);
        EXPECT_NEAR(rich, 2 * n - 1, 1e-6);
        EXPECT_LT(std::abs(rich - (2 * n - 1)), std::abs(fine[j] - (2 * n - 1)));
    }
}

TEST(LowestEigenvalues, RectangleShiftInvertMatchesDense) {
    const auto g = build_grid({{AxisSpec::interval(0, pi, 30), AxisSpec::interval(0, pi, 30)}});
    const auto c = sample_coefficients(g, "0", "0");
    const auto op = assemble_schrodinger(g, c, 0.0);
    EigenSolveOptions opts;
    opts.dense_limit = 0;
    const auto s = lowest_eigenvalues(op, 6, opts);
    EXPECT_EQ(s.method, "shift-invert-subspace");
    const auto ref = dense_lowest(op, 6);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(s.eigenvalues[j], ref[j], 1e-9);
    // Continuum values j^2 + k^2 = 2, 5, 5, 8, 10, 10 up to O(h^2); degeneracy kept.
    EXPECT_NEAR(s.eigenvalues[1], s.eigenvalues[2], 1e-9);
    EXPECT_NEAR(s.eigenvalues[0], 2.0, 5e-3);
    EXPECT_NEAR(s.eigenvalues[3], 8.0, 3e-2);
    EXPECT_LE(s.max_residual(), 1e-8);
}

TEST(LowestEigenvalues, AscendingWithDegenerateDisconnectedBlocks) {
    // Two identical decoupled blocks: each eigenvalue appears twice.
    const auto g = line(10.0, 199);
    const auto c = sample_coefficients(g, "0", "0");
    const auto op = assemble_schrodinger(g, c, 0.0);
    std::vector<int> idx;
    for (int p = 0; p < g.size(); ++p)
        if (std::abs(g.point(p)[0]) > 5.0) idx.push_back(p);
    const auto s = lowest_eigenvalues(op.restrict_to(idx), 4, {.keep_vectors = true});
    EXPECT_NEAR(s.eigenvalues[0], s.eigenvalues[1], 1e-10);
    EXPECT_NEAR(s.eigenvalues[2], s.eigenvalues[3], 1e-10);
    for (std::size_t j = 1; j < 4; ++j) EXPECT_LE(s.eigenvalues[j - 1], s.eigenvalues[j]);
    const Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-8);
}

TEST(LowestEigenvalues, MinMaxMonotonicity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const auto g = interval(0, 2, 150);
    const auto c = sample_coefficients(g, "x - 1", "0");
    const auto op = assemble_schrodinger(g, c, 4.0);
    SparseMatrix pert = op.matrix();
    for (int i = 0; i < g.size(); ++i) pert.coeffRef(i, i) += u(rng);
    const auto a = lowest_eigenvalues(op, 8);
    const auto b = lowest_eigenvalues(SymmetricOperator(pert), 8);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_GE(b.eigenvalues[j], a.eigenvalues[j] - 1e-10);
}

TEST(LowestEigenvalues, DeterministicForFixedSeed) {
    const auto g = build_grid({{AxisSpec::interval(0, 1, 25), AxisSpec::interval(0, 2, 25)}});
    const auto c = sample_coefficients(g, "x - y", "0");
    const auto op = assemble_schrodinger(g, c, 3.0);
    EigenSolveOptions opts;
    opts.dense_limit = 0;
    const auto a = lowest_eigenvalues(op, 4, opts);
    const auto b = lowest_eigenvalues(op, 4, opts);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}

TEST(LowestEigenvalues, Errors) {
    const auto g = build_grid({{AxisSpec::interval(0, 1, 20), AxisSpec::interval(0, 1, 20)}});
    const auto op = assemble_schrodinger(g, sample_coefficients(g, "0", "0"), 0.0);
    EXPECT_THROW(lowest_eigenvalues(op, 0), DomainError);
    EXPECT_THROW(lowest_eigenvalues(op, 401), DomainError);
    EXPECT_THROW(lowest_eigenvalues(op, 2, {.tol = 0.0}), DomainError);
    EigenSolveOptions opts;
    opts.dense_limit = 0;
    opts.max_iterations = 1;
    opts.tol = 1e-14;
    try {
        (void)lowest_eigenvalues(op, 3, opts);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_TRUE(std::isfinite(e.best_residual()));
        EXPECT_GT(e.best_residual(), 1e-14);
    }
}

TEST(NearestEigenvalue, FindsClosestAtAnyDepth) {
    const auto g = interval(0, pi, 200);
    const auto op = assemble_schrodinger(g, sample_coefficients(g, "0", "0"), 0.0);
    const auto r = nearest_eigenvalue(op, 50.0);
    const auto ref = dense_lowest(op, 10);
    EXPECT_EQ(r.index, 6);
    EXPECT_NEAR(r.value, ref[6], 1e-9);
    EXPECT_NEAR(r.distance, std::abs(ref[6] - 50.0), 1e-9);

    const auto g2 = build_grid({{AxisSpec::interval(0, pi, 12), AxisSpec::interval(0, pi, 12)}});
    const auto op2 = assemble_schrodinger(g2, sample_coefficients(g2, "0", "0"), 0.0);
    const auto r2 = nearest_eigenvalue(op2, 13.1);
    const auto ref2 = dense_lowest(op2, 144);
    double best = 1e300;
    for (double v : ref2) best = std::min(best, std::abs(v - 13.1));
    EXPECT_NEAR(r2.distance, best, 1e-9);
}

TEST(EssentialEstimate, BoundedDomainSentinel) {
    const auto g = interval(0, pi, 50);
    const auto e = essential_threshold_estimate(g, sample_coefficients(g, "1", "0"), 1.0, {0.5});
    EXPECT_TRUE(e.bounded());
    EXPECT_EQ(e.note, "purely discrete spectrum expected");
}

TEST(EssentialEstimate, FreeLaplacianThresholdIsZero) {
    const auto g = line(20.0, 799);
    const auto c = sample_coefficients(g, "if(abs(x) < 1, -1, 1/x^2)", "0");
    for (double mu : {-5.0, 0.0, 5.0}) {
        const auto e = essential_threshold_estimate(g, c, mu, default_exterior_radii(g));
        ASSERT_EQ(e.values.size(), 4u);
        EXPECT_TRUE(e.monotone);
        EXPECT_GE(e.gamma_inf, 0.0 - std::abs(mu) / 256.0);
        EXPECT_LT(e.gamma_inf, 0.7);
        EXPECT_NEAR(e.lower, 0.0, std::abs(mu) / 100.0 + 1e-3);  // tail of mu / x^2 at rho = 10
        EXPECT_NEAR(e.spread, e.values.back() - e.values.front(), 1e-12);
    }
}

TEST(EssentialEstimate, PotentialLimitTwo) {
    // Oracle: exterior values approach b_inf = 2 as R (and rho) grow.
    double prev = 1e300;
    for (double r : {20.0, 40.0, 80.0}) {
        const auto g = line(r, static_cast<int>(20 * r) - 1);
        const auto c = sample_coefficients(g, "exp(-x^2)", "2 - 3*exp(-x^2)");
        const auto e = essential_threshold_estimate(g, c, 1.0, default_exterior_radii(g));
        EXPECT_GT(e.gamma_inf, 2.0 - 1e-6);
        EXPECT_LT(e.gamma_inf, prev);
        prev = e.gamma_inf;
        EXPECT_NEAR(e.lower, 2.0, 1e-3);
    }
    EXPECT_NEAR(prev, 2.0, 0.05);
}

TEST(EssentialEstimate, ShiftLawWithUnitLimit) {
    const auto g = line(30.0, 599);
    const auto c = sample_coefficients(g, "1 - exp(-x^2)", "0");
    const auto e0 = essential_threshold_estimate(g, c, 0.0, default_exterior_radii(g));
    for (double mu : {-10.0, 7.0}) {
        const auto e = essential_threshold_estimate(g, c, mu, default_exterior_radii(g));
        EXPECT_NEAR(e.gamma_inf - e0.gamma_inf, mu, 1e-8);
    }
}

TEST(EssentialEstimate, SlopeBoundsAgainstZeroSample) {
    const auto g = line(20.0, 399);
    const auto c = sample_coefficients(g, "-1 + 1.5*exp(-x^2/4)*cos(x)", "sech(x)");
    const auto e0 = essential_threshold_estimate(g, c, 0.0, default_exterior_radii(g));
    for (double mu : {-30.0, -1.0, 2.0, 50.0}) {
        const auto e = essential_threshold_estimate(g, c, mu, default_exterior_radii(g));
        const double slope = mu >= 0 ? c.a_min : c.a_max;
        EXPECT_GE(e.gamma_inf, e0.gamma_inf + slope * mu - 1e-8);
    }
}

TEST(EssentialEstimate, RejectsBadRadii) {
    const auto g = line(10.0, 99);
    const auto c = sample_coefficients(g, "0", "0");
    EXPECT_THROW(essential_threshold_estimate(g, c, 0.0, {}), DomainError);
    EXPECT_THROW(essential_threshold_estimate(g, c, 0.0, {5.0, 4.0}), DomainError);
    EXPECT_THROW(essential_threshold_estimate(g, c, 0.0, {10.0}), DomainError);
    EXPECT_THROW(essential_threshold_estimate(g, c, 0.0, {-1.0}), DomainError);
}

TEST(EssentialEstimate, StripUsesTruncatedAxis) {
    // Strip R x (0, pi): essential threshold of the free Laplacian is the cross-section value 1.
    const auto g = build_grid({{AxisSpec::truncated_line(12.0, 119), AxisSpec::interval(0, pi, 15)}});
    const auto c = sample_coefficients(g, "0", "0");
    const auto e = essential_threshold_estimate(g, c, 0.0, default_exterior_radii(g));
    EXPECT_GT(e.gamma_inf, 0.99);
    EXPECT_NEAR(e.lower, 1.0, 0.01);
}
