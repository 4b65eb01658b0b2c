#pragma once

// The damped wave operator A = [[0, I], [-S0, -alpha diag(a)]] on the
// discrete energy space, its spectrum, and the check against eigencurves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <lapacke.h>

#include "dampwave/coefficients.hpp"
#include "dampwave/eigencurve.hpp"
#include "dampwave/error.hpp"
#include "dampwave/grid.hpp"
#include "dampwave/intersection.hpp"
#include "dampwave/schrodinger.hpp"

namespace dampwave {

using ComplexVector = Eigen::VectorXcd;

class BlockOperator {
public:
    BlockOperator(SymmetricOperator s0, std::vector<double> a, double alpha, double b_min = 0.0,
                  double cell_volume = 1.0)
        : s0_(std::move(s0)), a_(Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()))),
          alpha_(alpha), b_min_(b_min), volume_(cell_volume) {
        if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
        if (a_.size() != s0_.dimension()) throw DomainError("damping samples do not match S0");
    }

    int n() const { return s0_.dimension(); }
    int dimension() const { return 2 * n(); }
    double alpha() const { return alpha_; }
    const SymmetricOperator& s0() const { return s0_; }
    const Vector& damping() const { return a_; }
    double b_min() const { return b_min_; }
    EnergyNorm energy() const { return EnergyNorm(s0_, b_min_, volume_); }

    std::pair<Vector, Vector> apply(const Vector& psi1, const Vector& psi2) const {
        Vector out2 = -s0_.apply(psi1) - alpha_ * a_.cwiseProduct(psi2);
        return {psi2, std::move(out2)};
    }

    // Stacked form {psi1; psi2}, real or complex.
    ComplexVector apply(const ComplexVector& psi) const {
        const int m = n();
        ComplexVector out(2 * m);
        out.head(m) = psi.tail(m);
        const ComplexVector s = s0_.matrix().cast<std::complex<double>>() * psi.head(m);
        out.tail(m) = -s - alpha_ * a_.cast<std::complex<double>>().cwiseProduct(psi.tail(m));
        return out;
    }

    Eigen::MatrixXd dense() const {
        const int m = n();
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        d.topRightCorner(m, m).setIdentity();
        d.bottomLeftCorner(m, m) = -Eigen::MatrixXd(s0_.matrix());
        d.bottomRightCorner(m, m).diagonal() = -alpha_ * a_;
        return d;
    }

    double trace() const { return -alpha_ * a_.sum(); }

    // Q(lambda) = S0 + lambda alpha diag(a) + lambda^2 I.
    SparseMatrix qep(double lambda) const {
        SparseMatrix q = s0_.matrix();
        Vector d = (lambda * alpha_) * a_;
        d.array() += lambda * lambda;
        for (int i = 0; i < n(); ++i) q.coeffRef(i, i) += d[i];
        q.makeCompressed();
        return q;
    }

    // Scale for relative QEP residuals: |lambda|^2 + alpha |lambda| ||a|| + ||S0||.
    double qep_scale(double lambda) const {
        return lambda * lambda + alpha_ * std::abs(lambda) * a_.cwiseAbs().maxCoeff() + s0_.norm_inf();
    }

    double qep_residual(double lambda, const Vector& v1) const {
        const double nv = v1.norm();
        if (nv == 0.0) return std::numeric_limits<double>::infinity();
        return (qep(lambda) * v1).norm() / (qep_scale(lambda) * nv);
    }

private:
    SymmetricOperator s0_;
    Vector a_;
    double alpha_;
    double b_min_;
    double volume_;
};

inline BlockOperator assemble_block(const Grid& grid, const CoefficientSet& coeffs, double alpha) {
    return BlockOperator(assemble_schrodinger(grid, coeffs, 0.0), coeffs.a, alpha, coeffs.b_min, grid.cell_volume());
}

struct BlockEigenvalue {
    std::complex<double> lambda;
    double residual = 0.0;  // ||A v - lambda v|| / (||A||_inf ||v||)
    bool real = false;
};

struct RealEigenpair {
    double lambda = 0.0;
    double qep_residual = 0.0;
    Vector v1;  // normalised: ||{v1, lambda v1}||_H = 1
    // Filled by cross_validate.
    double curve_distance = std::numeric_limits<double>::quiet_NaN();
    int matched_curve = -1;
};

enum class SpectrumMode { Full, RealWindow };

struct RealWindow {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    std::vector<double> seeds;
};

struct SpectrumOptions {
    int dense_budget = 4000;
    double reality_tol = 1e-8;
    int max_iterations = 60;
    double qep_tol = 1e-8;
};

struct SpectrumReport {
    double alpha = 0.0;
    SpectrumMode mode = SpectrumMode::Full;
    std::vector<BlockEigenvalue> eigenvalues;  // empty in window mode
    std::vector<RealEigenpair> real;           // ascending
    double max_qep_residual = 0.0;
    std::vector<std::string> warnings;

    std::vector<double> real_values() const {
        std::vector<double> v;
        for (const auto& r : real) v.push_back(r.lambda);
        return v;
    }
    std::optional<double> largest_real_part() const {
        std::optional<double> m;
        for (const auto& e : eigenvalues) m = std::max(m.value_or(-std::numeric_limits<double>::infinity()), e.lambda.real());
        for (const auto& r : real) m = std::max(m.value_or(-std::numeric_limits<double>::infinity()), r.lambda);
        return m;
    }
};

inline bool is_real(std::complex<double> z, double tol) { return std::abs(z.imag()) < tol * std::max(1.0, std::abs(z)); }

namespace detail {

struct RefineResult {
    double lambda = 0.0;
    Vector v1;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// Real root of v^T Q(rho) v = 0 nearest to sigma, the nonlinear Rayleigh functional.
inline double rayleigh_functional(const BlockOperator& op, const Vector& v, double sigma) {
    const double n2 = v.squaredNorm();
    const double c = op.alpha() * v.dot(op.damping().cwiseProduct(v));
    const double s = v.dot(op.s0().apply(v));
    const double disc = c * c - 4.0 * n2 * s;
    if (disc < 0.0) return -c / (2.0 * n2);
    const double q = -0.5 * (c + std::copysign(std::sqrt(disc), c));
    if (q == 0.0) return 0.0;
    const double r1 = q / n2;
    const double r2 = s / q;
    return std::abs(r1 - sigma) <= std::abs(r2 - sigma) ? r1 : r2;
}

// Rayleigh functional iteration for a real eigenpair of the QEP.
inline RefineResult refine_real(const BlockOperator& op, double sigma, Vector v, int max_iter, double tol) {
    RefineResult best;
    if (v.size() == 0 || v.norm() == 0.0) {
        std::mt19937_64 rng(0x5eedULL);
        std::normal_distribution<double> nd;
        v = Vector(op.n());
        for (int i = 0; i < op.n(); ++i) v[i] = nd(rng);
        Eigen::SparseLU<SparseMatrix> lu(op.qep(sigma));
        if (lu.info() == Eigen::Success) {
            for (int it = 0; it < 3; ++it) {
                v = lu.solve(v);
                v /= v.norm();
            }
        }
    }
    v /= v.norm();
    double rho = sigma;
    for (int it = 0; it < max_iter; ++it) {
        rho = rayleigh_functional(op, v, rho);
        const double res = op.qep_residual(rho, v);
        if (res < best.residual) best = {rho, v, res, res <= tol};
        if (res <= 1e-14) break;
        Eigen::SparseLU<SparseMatrix> lu(op.qep(rho));
        if (lu.info() != Eigen::Success) break;  // exactly singular: rho is an eigenvalue
        Vector rhs = 2.0 * rho * v + op.alpha() * op.damping().cwiseProduct(v);
        Vector w = lu.solve(rhs);
        if (!w.allFinite() || w.norm() == 0.0) break;
        v = w / w.norm();
    }
    best.converged = best.residual <= tol;
    return best;
}

inline void normalise(const BlockOperator& op, RealEigenpair& p) {
    const auto e = op.energy();
    const double h = e.h_norm(p.v1, p.lambda * p.v1);
    if (h > 0.0) p.v1 /= h;
    const Eigen::Index k = [&] {
        Eigen::Index i = 0;
        p.v1.cwiseAbs().maxCoeff(&i);
        return i;
    }();
    if (p.v1.size() && p.v1[k] < 0.0) p.v1 = -p.v1;
}

inline void sort_dedupe(std::vector<RealEigenpair>& real) {
    std::sort(real.begin(), real.end(), [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
}

}  // namespace detail

// Full mode: dense nonsymmetric eigensolve of the 2N x 2N matrix.
inline SpectrumReport spectrum_full(const BlockOperator& op, const SpectrumOptions& opts = {}) {
    const int dim = op.dimension();
    if (dim > opts.dense_budget) {
        throw DomainError("full spectrum needs 2N <= " + std::to_string(opts.dense_budget) + ", got " +
                          std::to_string(dim) + "; use the real-window mode");
    }
    SpectrumReport rep;
    rep.alpha = op.alpha();
    rep.mode = SpectrumMode::Full;
    Eigen::MatrixXd a = op.dense();
    const double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();
    std::vector<double> wr(static_cast<std::size_t>(dim)), wi(static_cast<std::size_t>(dim));
    Eigen::MatrixXd vr(dim, dim);
    double dummy = 0.0;
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', dim, a.data(), dim, wr.data(), wi.data(), &dummy,
                                          1, vr.data(), dim);
    if (info != 0) throw SolverError("dgeev failed with info " + std::to_string(info), std::numeric_limits<double>::infinity());

    for (int j = 0; j < dim; ++j) {
        const std::complex<double> lam(wr[static_cast<std::size_t>(j)], wi[static_cast<std::size_t>(j)]);
        ComplexVector v(dim);
        if (wi[static_cast<std::size_t>(j)] == 0.0) {
            v = vr.col(j).cast<std::complex<double>>();
        } else if (wi[static_cast<std::size_t>(j)] > 0.0) {
            v = vr.col(j).cast<std::complex<double>>() + std::complex<double>(0, 1) * vr.col(j + 1).cast<std::complex<double>>();
        } else {
            v = vr.col(j - 1).cast<std::complex<double>>() - std::complex<double>(0, 1) * vr.col(j).cast<std::complex<double>>();
        }
        BlockEigenvalue e;
        e.lambda = lam;
        e.residual = (op.apply(v) - lam * v).norm() / (anorm * v.norm());
        e.real = is_real(lam, opts.reality_tol);
        rep.eigenvalues.push_back(e);
        if (e.real) {
            const double l0 = lam.real();
            const Vector v1 = vr.col(j).head(op.n());
            auto r = detail::refine_real(op, l0, v1, 4, opts.qep_tol);
            RealEigenpair p;
            // Keep the dense value unless refinement stayed close and improved it.
            const double r0 = op.qep_residual(l0, v1);
            if (r.residual < r0 && std::abs(r.lambda - l0) <= 1e-6 * std::max(1.0, std::abs(l0))) {
                p.lambda = r.lambda;
                p.v1 = r.v1;
                p.qep_residual = r.residual;
            } else {
                p.lambda = l0;
                p.v1 = v1;
                p.qep_residual = r0;
            }
            detail::normalise(op, p);
            rep.max_qep_residual = std::max(rep.max_qep_residual, p.qep_residual);
            rep.real.push_back(std::move(p));
        }
    }
    detail::sort_dedupe(rep.real);
    for (const auto& p : rep.real)
        if (p.qep_residual > opts.qep_tol)
            rep.warnings.push_back("real eigenvalue " + std::to_string(p.lambda) + " has QEP residual " +
                                   std::to_string(p.qep_residual));
    return rep;
}

// Real-window mode: Rayleigh functional iteration from each seed; values
// within 1e-8 relative of each other are merged.
inline SpectrumReport spectrum_window(const BlockOperator& op, const RealWindow& window, const SpectrumOptions& opts = {}) {
    SpectrumReport rep;
    rep.alpha = op.alpha();
    rep.mode = SpectrumMode::RealWindow;
    double worst = 0.0;
    int failed = 0;
    for (double seed : window.seeds) {
        auto r = detail::refine_real(op, seed, Vector(), opts.max_iterations, opts.qep_tol);
        if (!r.converged) {
            ++failed;
            worst = std::max(worst, r.residual);
            rep.warnings.push_back("seed " + std::to_string(seed) + " did not converge (residual " +
                                   std::to_string(r.residual) + ")");
            continue;
        }
        if (r.lambda < window.lower || r.lambda > window.upper) continue;
        bool dup = false;
        for (const auto& p : rep.real)
            if (std::abs(p.lambda - r.lambda) <= 1e-8 * std::max(1.0, std::abs(r.lambda))) dup = true;
        if (dup) continue;
        RealEigenpair p;
        p.lambda = r.lambda;
        p.v1 = r.v1;
        p.qep_residual = r.residual;
        detail::normalise(op, p);
        rep.max_qep_residual = std::max(rep.max_qep_residual, p.qep_residual);
        rep.real.push_back(std::move(p));
    }
    if (failed > 0 && rep.real.empty()) throw SolverError("real-window eigensolve did not converge", worst);
    detail::sort_dedupe(rep.real);
    return rep;
}

inline SpectrumReport spectrum(const BlockOperator& op, SpectrumMode mode, const RealWindow& window = {},
                               const SpectrumOptions& opts = {}) {
    return mode == SpectrumMode::Full ? spectrum_full(op, opts) : spectrum_window(op, window, opts);
}

// Seeds for the window solver: lambda of every in-range curve intersection.
inline RealWindow window_from_intersections(const std::vector<IntersectionRecord>& records) {
    RealWindow w;
    for (const auto& r : records)
        if (!r.out_of_range()) w.seeds.push_back(r.lambda);
    return w;
}

struct ValidationMismatch {
    std::string direction;  // "block->curve" or "curve->block"
    double lambda = 0.0;
    int curve = -1;
    double distance = 0.0;
    std::string detail;
};

struct ValidationSummary {
    double alpha = 0.0;
    double tol = 1e-6;
    int real_checked = 0;
    int intersections_checked = 0;
    int intersections_skipped = 0;  // not discrete-classified
    int beyond_k = 0;               // matched by an eigenvalue above the k tracked curves
    std::vector<ValidationMismatch> mismatches;

    bool ok() const { return mismatches.empty(); }
};

// Both directions of the parabola criterion at the matrix level. Distances in
// gamma are scaled by max(1, lambda^2), distances in lambda by max(1, |lambda|).
// A real eigenvalue whose -lambda^2 lies above the tracked curves is matched
// deeper in the spectrum and counted in beyond_k.
inline ValidationSummary cross_validate(SpectrumReport& report, const EigencurveTable& table, double alpha,
                                        const std::vector<IntersectionRecord>& records, double tol = 1e-6,
                                        double tangency_tol = 1e-6) {
    if (!table.source) throw DomainError("cross_validate needs a table with a curve sampler");
    ValidationSummary s;
    s.alpha = alpha;
    s.tol = tol;
    for (auto& p : report.real) {
        const double mu = alpha * p.lambda;
        if (mu < table.mu_min() - 1e-12 || mu > table.mu_max() + 1e-12) {
            throw RangeError("mu = alpha*lambda = " + std::to_string(mu) + " lies outside the table [" +
                             std::to_string(table.mu_min()) + ", " + std::to_string(table.mu_max()) +
                             "]; extend the mu range");
        }
        const auto slice = table.source->slice(mu);
        const double target = -p.lambda * p.lambda;
        double best = std::numeric_limits<double>::infinity();
        int best_n = -1;
        for (std::size_t n = 0; n < slice.eigenvalues.size(); ++n) {
            const double d = std::abs(slice.eigenvalues[n] - target);
            if (d < best) {
                best = d;
                best_n = static_cast<int>(n);
            }
        }
        const double lim = tol * std::max(1.0, p.lambda * p.lambda);
        if (!(best <= lim) && !slice.eigenvalues.empty() && target > slice.eigenvalues.back()) {
            // Above the tracked curves: look deeper into the spectrum of S_(alpha lambda).
            const auto deep = table.source->nearest(mu, target);
            if (deep.distance < best) {
                best = deep.distance;
                best_n = deep.index;
            }
            if (best <= lim) ++s.beyond_k;
        }
        p.curve_distance = best;
        p.matched_curve = best_n;
        ++s.real_checked;
        if (!(best <= lim)) s.mismatches.push_back({"block->curve", p.lambda, best_n, best, "no eigenvalue of S_(alpha lambda) at -lambda^2"});
    }
    for (const auto& r : records) {
        if (r.out_of_range() || r.essential()) continue;
        if (r.classification != SpectralClass::Discrete) {
            ++s.intersections_skipped;
            continue;
        }
        ++s.intersections_checked;
        const bool tangent = r.kind == IntersectionKind::Tangency;
        // A tangency within tangency_tol may split into a complex pair of width ~sqrt(tangency_tol).
        const double scale = std::max(1.0, std::abs(r.lambda));
        const double lim = tangent ? std::max(tol, 10.0 * std::sqrt(tangency_tol)) * scale : tol * scale;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : report.real) best = std::min(best, std::abs(p.lambda - r.lambda));
        if (tangent)
            for (const auto& e : report.eigenvalues) best = std::min(best, std::abs(e.lambda - r.lambda));
        if (!(best <= lim)) {
            s.mismatches.push_back({"curve->block", r.lambda, r.curve, best,
                                    std::string("no block eigenvalue near the ") + to_string(r.kind) + " intersection"});
        }
    }
    return s;
}

}  // namespace dampwave
