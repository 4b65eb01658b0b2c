#pragma once

// Lowest eigenvalues of the self-adjoint family S_mu and the essential
// threshold estimate obtained from exterior zones.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "dampwave/coefficients.hpp"
#include "dampwave/error.hpp"
#include "dampwave/grid.hpp"
#include "dampwave/schrodinger.hpp"
#include "dampwave/tridiagonal.hpp"

namespace dampwave {

struct EigenSolveOptions {
    double tol = 1e-8;
    // 0 means 10 * N.
    int max_iterations = 0;
    std::uint64_t seed = 20040602;
    bool keep_vectors = false;
    // Problems up to this size go through a dense self-adjoint solve.
    int dense_limit = 400;
};

struct SpectrumSlice {
    double mu = 0.0;
    std::vector<double> eigenvalues;
    std::vector<double> residuals;
    Eigen::MatrixXd eigenvectors;  // empty unless requested
    int iterations = 0;
    std::string method;

    double max_residual() const {
        return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    }
};

namespace detail {

inline void check_request(const SymmetricOperator& op, int k, const EigenSolveOptions& opts) {
    if (k < 1 || k > op.dimension()) {
        throw DomainError("requested " + std::to_string(k) + " eigenvalues of a matrix of dimension " +
                          std::to_string(op.dimension()));
    }
    if (!(opts.tol > 0.0)) throw DomainError("eigenvalue tolerance must be positive");
}

inline SpectrumSlice lowest_tridiagonal(const SymmetricOperator& op, int k, const EigenSolveOptions& opts) {
    const auto& d = op.diagonal_band();
    const auto& e = op.off_band();
    const auto bounds = tridiag::gershgorin(d, e);
    const double scale = std::max({1.0, std::abs(bounds.lower), std::abs(bounds.upper)});
    const int budget = opts.max_iterations > 0 ? opts.max_iterations : 10 * op.dimension();

    SpectrumSlice s;
    s.method = "tridiagonal-sturm-bisection";
    std::mt19937_64 rng(opts.seed);
    std::vector<Eigen::VectorXd> vecs;
    for (int j = 0; j < k; ++j) {
        const double lam = tridiag::bisect_eigenvalue(d, e, j, bounds);
        // Vectors of coincident eigenvalues are kept mutually orthogonal.
        std::vector<Eigen::VectorXd> cluster;
        for (int i = 0; i < j; ++i)
            if (std::abs(s.eigenvalues[static_cast<std::size_t>(i)] - lam) <= 1e-10 * scale)
                cluster.push_back(vecs[static_cast<std::size_t>(i)]);
        Eigen::VectorXd v;
        double res = std::numeric_limits<double>::infinity();
        int its = 0;
        for (int attempt = 0; attempt < 4 && res > opts.tol && its < budget; ++attempt) {
            v = tridiag::inverse_iteration(d, e, lam, rng, cluster, 2 + attempt);
            its += 2 + attempt;
            res = (tridiag::multiply(d, e, v) - lam * v).norm();
        }
        if (res > opts.tol) {
            throw SolverError("inverse iteration did not reach the residual tolerance for eigenvalue " +
                                  std::to_string(j + 1),
                              res);
        }
        s.iterations += its;
        s.eigenvalues.push_back(lam);
        s.residuals.push_back(res);
        vecs.push_back(std::move(v));
    }
    if (opts.keep_vectors) {
        s.eigenvectors.resize(op.dimension(), k);
        for (int j = 0; j < k; ++j) s.eigenvectors.col(j) = vecs[static_cast<std::size_t>(j)];
    }
    return s;
}

inline SpectrumSlice lowest_dense(const SymmetricOperator& op, int k, const EigenSolveOptions& opts) {
    const Eigen::MatrixXd m = Eigen::MatrixXd(op.matrix());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw SolverError("dense self-adjoint eigensolve failed", NAN);
    SpectrumSlice s;
    s.method = "dense-self-adjoint";
    s.iterations = 1;
    for (int j = 0; j < k; ++j) {
        const double lam = es.eigenvalues()[j];
        const Eigen::VectorXd v = es.eigenvectors().col(j);
        s.eigenvalues.push_back(lam);
        s.residuals.push_back((m * v - lam * v).norm());
    }
    if (s.max_residual() > opts.tol) throw SolverError("dense self-adjoint residual above tolerance", s.max_residual());
    if (opts.keep_vectors) s.eigenvectors = es.eigenvectors().leftCols(k);
    return s;
}

// Block inverse iteration with a fixed shift below the spectrum and a
// Rayleigh-Ritz projection every sweep.
inline SpectrumSlice lowest_shift_invert(const SymmetricOperator& op, int k, const EigenSolveOptions& opts) {
    const int n = op.dimension();
    const int p = std::min(n, std::max(2 * k, k + 8));
    const int budget = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;
    const double g = op.gershgorin_lower();
    const double sigma = g - std::max(1e-2, 1e-3 * std::abs(g));

    SparseMatrix shifted = op.matrix();
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw SolverError("sparse LDLT factorisation of shifted operator failed", NAN);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = nd(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr0(x);
    x = qr0.householderQ() * Eigen::MatrixXd::Identity(n, p);

    SpectrumSlice s;
    s.method = "shift-invert-subspace";
    double best = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= budget; ++it) {
        Eigen::MatrixXd y = ldlt.solve(x);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
        const Eigen::MatrixXd aq = op.matrix() * q;
        Eigen::MatrixXd h = q.transpose() * aq;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        x = q * es.eigenvectors();
        const Eigen::MatrixXd ax = aq * es.eigenvectors();
        double worst = 0.0;
        std::vector<double> res(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            res[static_cast<std::size_t>(j)] = (ax.col(j) - es.eigenvalues()[j] * x.col(j)).norm();
            worst = std::max(worst, res[static_cast<std::size_t>(j)]);
        }
        best = std::min(best, worst);
        if (worst <= opts.tol) {
            s.iterations = it;
            for (int j = 0; j < k; ++j) s.eigenvalues.push_back(es.eigenvalues()[j]);
            s.residuals = std::move(res);
            if (opts.keep_vectors) s.eigenvectors = x.leftCols(k);
            return s;
        }
    }
    throw SolverError("shift-invert subspace iteration exhausted its budget of " + std::to_string(budget) +
                          " sweeps",
                      best);
}

}  // namespace detail

// The k smallest eigenvalues (ascending, with multiplicity) and their
// residual norms ||S v - gamma v|| / ||v||.
inline SpectrumSlice lowest_eigenvalues(const SymmetricOperator& op, int k, const EigenSolveOptions& opts = {}) {
    detail::check_request(op, k, opts);
    if (op.is_tridiagonal()) return detail::lowest_tridiagonal(op, k, opts);
    if (op.dimension() <= opts.dense_limit) return detail::lowest_dense(op, k, opts);
    return detail::lowest_shift_invert(op, k, opts);
}

struct NearestEigenvalue {
    double value = 0.0;
    int index = 0;  // 0-based position in the ascending spectrum
    double distance = 0.0;
};

// Eigenvalue of `op` closest to `target`, searching as deep into the
// spectrum as needed.
inline NearestEigenvalue nearest_eigenvalue(const SymmetricOperator& op, double target,
                                            const EigenSolveOptions& opts = {}) {
    NearestEigenvalue best;
    best.distance = std::numeric_limits<double>::infinity();
    auto consider = [&](double v, int idx) {
        if (std::abs(v - target) < best.distance) best = {v, idx, std::abs(v - target)};
    };
    if (op.is_tridiagonal()) {
        const auto& d = op.diagonal_band();
        const auto& e = op.off_band();
        const auto bounds = tridiag::gershgorin(d, e);
        const int below = tridiag::sturm_count(d, e, target);
        if (below > 0) consider(tridiag::bisect_eigenvalue(d, e, below - 1, bounds), below - 1);
        if (below < op.dimension()) consider(tridiag::bisect_eigenvalue(d, e, below, bounds), below);
        return best;
    }
    int k = std::min(op.dimension(), 8);
    for (;;) {
        const auto s = lowest_eigenvalues(op, k, opts);
        for (int j = 0; j < k; ++j) consider(s.eigenvalues[static_cast<std::size_t>(j)], j);
        if (s.eigenvalues.back() > target || k == op.dimension()) return best;
        k = std::min(op.dimension(), 2 * k);
    }
}

// Persson-type estimate of inf sigma_ess(S_mu): lowest Dirichlet eigenvalue
// of S_mu restricted to the exterior zones {dist > rho}.
struct EssentialEstimate {
    double mu = 0.0;
    // +infinity on bounded domains (purely discrete spectrum).
    double gamma_inf = std::numeric_limits<double>::infinity();
    std::vector<double> radii;
    std::vector<double> values;
    bool monotone = true;
    double spread = 0.0;
    // Heuristic lower end: min over radii of value minus the Dirichlet
    // confinement energy of the exterior slab along the truncated axis.
    double lower = std::numeric_limits<double>::infinity();
    std::string note;

    bool bounded() const { return !std::isfinite(gamma_inf); }
};

inline EssentialEstimate essential_threshold_estimate(const Grid& grid, const CoefficientSet& coeffs, double mu,
                                                      const std::vector<double>& radii,
                                                      const EigenSolveOptions& opts = {}) {
    EssentialEstimate est;
    est.mu = mu;
    if (!grid.has_truncated_axis()) {
        est.note = "purely discrete spectrum expected";
        return est;
    }
    const double big_r = grid.min_truncation_radius();
    double h = 0.0;
    for (const auto& ax : grid.axes())
        if (ax.truncated && ax.radius() == big_r) h = ax.h;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !(radii[i] < big_r)) {
            throw DomainError("exterior radius " + std::to_string(radii[i]) + " outside (0, " + std::to_string(big_r) +
                              ")");
        }
        if (i > 0 && !(radii[i] > radii[i - 1])) throw DomainError("exterior radii must be strictly ascending");
    }
    if (radii.empty()) throw DomainError("need at least one exterior radius");

    const auto full = assemble_schrodinger(grid, coeffs, mu);
    EigenSolveOptions zone_opts = opts;
    zone_opts.keep_vectors = false;
    for (double rho : radii) {
        std::vector<int> idx;
        double nearest = big_r;
        for (int p = 0; p < grid.size(); ++p) {
            const double dist = grid.truncated_distance(p);
            if (dist > rho) {
                idx.push_back(p);
                nearest = std::min(nearest, dist);
            }
        }
        if (idx.empty()) throw DomainError("exterior zone beyond radius " + std::to_string(rho) + " is empty");
        const auto zone = full.restrict_to(idx);
        const double v = lowest_eigenvalues(zone, 1, zone_opts).eigenvalues.front();
        est.radii.push_back(rho);
        est.values.push_back(v);
        // Discrete Dirichlet ground state of the widest exterior slab.
        const double width = big_r - nearest + h;
        const double conf = 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / (2.0 * width)), 2);
        est.lower = std::min(est.lower, v - conf);
    }
    const double tol = 2.0 * opts.tol;
    for (std::size_t i = 1; i < est.values.size(); ++i)
        if (est.values[i] < est.values[i - 1] - tol) est.monotone = false;
    est.gamma_inf = est.values.back();
    est.spread = *std::max_element(est.values.begin(), est.values.end()) -
                 *std::min_element(est.values.begin(), est.values.end());
    return est;
}

inline std::vector<double> default_exterior_radii(const Grid& grid) {
    const double r = grid.min_truncation_radius();
    return {0.5 * r, 0.6 * r, 0.7 * r, 0.8 * r};
}

}  // namespace dampwave
