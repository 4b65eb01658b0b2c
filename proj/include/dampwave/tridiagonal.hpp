#pragma once

// Symmetric tridiagonal eigenvalue kernels: Sturm-sequence bisection for
// selected eigenvalues and inverse iteration for their eigenvectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dampwave::tridiag {

// Number of eigenvalues strictly less than x. `off[i]` couples i and i+1.
inline int sturm_count(std::span<const double> diag, std::span<const double> off, double x) {
    const std::size_t n = diag.size();
    constexpr double tiny = std::numeric_limits<double>::min() * 1e8;
    int count = 0;
    double q = diag[0] - x;
    for (std::size_t i = 0;; ++i) {
        if (std::abs(q) < tiny) q = -tiny;
        if (q < 0.0) ++count;
        if (i + 1 >= n) break;
        q = diag[i + 1] - x - off[i] * off[i] / q;
    }
    return count;
}

struct Bounds {
    double lower;
    double upper;
};

inline Bounds gershgorin(std::span<const double> diag, std::span<const double> off) {
    const std::size_t n = diag.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(off[i - 1]);
        if (i + 1 < n) r += std::abs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
}

// The j-th (0-based, ascending) eigenvalue by bisection, to near machine
// precision relative to the matrix norm.
inline double bisect_eigenvalue(std::span<const double> diag, std::span<const double> off, int j, Bounds b) {
    const double scale = std::max(std::abs(b.lower), std::abs(b.upper));
    const double abstol = 2.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0) * 0.25;
    double lo = b.lower - abstol;
    double hi = b.upper + abstol;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= abstol + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) break;
        if (sturm_count(diag, off, mid) > j) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Solves (T - shift I) x = rhs with partial pivoting (LAPACK dgtsv style).
// Zero pivots are replaced by a tiny perturbation, which is what inverse
// iteration wants near an eigenvalue.
inline void shifted_solve(std::span<const double> diag, std::span<const double> off, double shift,
                          Eigen::VectorXd& x) {
    const std::size_t n = diag.size();
    const auto gb = gershgorin(diag, off);
    const double pert = std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(gb.lower), std::abs(gb.upper)});
    std::vector<double> d(n), du(n, 0.0), du2(n, 0.0), dl(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = diag[i] - shift;
        if (i + 1 < n) {
            du[i] = off[i];
            dl[i] = off[i];
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = pert;
            const double f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            x[static_cast<Eigen::Index>(i + 1)] -= f * x[static_cast<Eigen::Index>(i)];
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            const double xi = x[static_cast<Eigen::Index>(i)];
            x[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i + 1)];
            x[static_cast<Eigen::Index>(i + 1)] = xi - f * x[static_cast<Eigen::Index>(i + 1)];
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = pert;
    // Back substitution with the upper factor (d, du, du2).
    for (std::size_t ii = n; ii-- > 0;) {
        const auto i = static_cast<Eigen::Index>(ii);
        double v = x[i];
        if (ii + 1 < n) v -= du[ii] * x[i + 1];
        if (ii + 2 < n) v -= du2[ii] * x[i + 2];
        x[i] = v / d[ii];
    }
}

// Eigenvector for an accurately known eigenvalue. The iterate is kept
// orthogonal to `previous`, which the caller fills with the vectors of
// numerically coincident eigenvalues.
inline Eigen::VectorXd inverse_iteration(std::span<const double> diag, std::span<const double> off, double lambda,
                                         std::mt19937_64& rng, const std::vector<Eigen::VectorXd>& previous = {},
                                         int iterations = 3) {
    const auto n = static_cast<Eigen::Index>(diag.size());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
    x.normalize();
    for (int it = 0; it < iterations; ++it) {
        shifted_solve(diag, off, lambda, x);
        for (const auto& p : previous) x -= p.dot(x) * p;
        const double nrm = x.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) {
            for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
        }
        x /= x.norm();
    }
    return x;
}

inline Eigen::VectorXd multiply(std::span<const double> diag, std::span<const double> off, const Eigen::VectorXd& x) {
    const auto n = static_cast<Eigen::Index>(diag.size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double v = diag[k] * x[i];
        if (i > 0) v += off[k - 1] * x[i - 1];
        if (i + 1 < n) v += off[k] * x[i + 1];
        y[i] = v;
    }
    return y;
}

}  // namespace dampwave::tridiag
