#pragma once

// Time evolution of Psi_t = A Psi by the implicit trapezoidal rule built
// from resolvent solves, and the resolvent / semigroup bounds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "dampwave/block_operator.hpp"
#include "dampwave/error.hpp"

namespace dampwave {

struct StateVector {
    Vector psi1;
    Vector psi2;
    double h_norm = 0.0;

    static StateVector make(const EnergyNorm& e, Vector p1, Vector p2) {
        StateVector s{std::move(p1), std::move(p2), 0.0};
        s.h_norm = e.h_norm(s.psi1, s.psi2);
        return s;
    }
    void refresh(const EnergyNorm& e) { h_norm = e.h_norm(psi1, psi2); }
};

struct SemigroupConstants {
    double eta_alpha = 0.0;
    double omega_alpha = 0.0;
};

inline SemigroupConstants semigroup_constants(double alpha, double a_min, double b_min) {
    const double c = 1.0 + alpha * std::abs(a_min) + std::abs(b_min);
    return {0.5 / c, 2.0 * c};
}

inline SemigroupConstants semigroup_constants(const BlockOperator& op) {
    return semigroup_constants(op.alpha(), op.damping().minCoeff(), op.b_min());
}

// Factorisation of M = I + eta alpha diag(a) + eta^2 S0, shared by the
// resolvent and the a priori check.
class ReducedSystem {
public:
    ReducedSystem(const BlockOperator& op, double eta) : eta_(eta) {
        if (!(eta > 0.0)) throw DomainError("eta must be positive");
        SparseMatrix m = (eta * eta) * op.s0().matrix();
        for (int i = 0; i < op.n(); ++i) m.coeffRef(i, i) += 1.0 + eta * op.alpha() * op.damping()[i];
        m.makeCompressed();
        m_ = m;
        ldlt_.compute(m);
        use_ldlt_ = ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0.0).all();
        if (!use_ldlt_) {
            lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
            lu_->compute(m);
            if (lu_->info() != Eigen::Success) {
                throw SolverError("reduced resolvent system is singular at eta = " + std::to_string(eta),
                                  std::numeric_limits<double>::infinity());
            }
        }
    }

    Vector solve(const Vector& rhs) const {
        Vector x = use_ldlt_ ? Vector(ldlt_.solve(rhs)) : Vector(lu_->solve(rhs));
        if (!x.allFinite()) throw SolverError("reduced resolvent solve produced non-finite values", std::numeric_limits<double>::infinity());
        return x;
    }

    double eta() const { return eta_; }
    bool positive_definite() const { return use_ldlt_; }
    const SparseMatrix& matrix() const { return m_; }

private:
    double eta_;
    SparseMatrix m_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
    bool use_ldlt_ = false;
};

struct ResolventResult {
    StateVector psi;
    double residual = 0.0;  // ||Psi - eta A Psi - Phi||_H / ||Phi||_H
    double ratio = 0.0;     // ||Psi||_H / ||Phi||_H
    double bound = std::numeric_limits<double>::infinity();  // (1 - eta / eta_alpha)^-1
    bool bound_holds = true;
    std::string warning;
};

namespace detail {

inline StateVector resolvent_apply(const BlockOperator& op, const ReducedSystem& m, const EnergyNorm& e,
                                   const Vector& phi1, const Vector& phi2) {
    const double eta = m.eta();
    const Vector& a = op.damping();
    const Vector v1 = m.solve(phi1);
    const Vector v2 = m.solve(op.alpha() * a.cwiseProduct(phi1) + phi2);
    Vector psi1 = v1 + eta * v2;
    Vector psi2 = -(op.alpha() * a.cwiseProduct(v1) + eta * op.s0().apply(v1)) + v2;
    return StateVector::make(e, std::move(psi1), std::move(psi2));
}

}  // namespace detail

// Solves Psi - eta A Psi = Phi through two solves with M.
inline ResolventResult resolvent_solve(const BlockOperator& op, double eta, const StateVector& phi,
                                       double bound_tol = 1e-10) {
    const auto c = semigroup_constants(op);
    ResolventResult r;
    if (!(eta > 0.0) || eta >= c.eta_alpha) {
        r.warning = "eta = " + std::to_string(eta) + " outside (0, eta_alpha = " + std::to_string(c.eta_alpha) + ")";
    }
    const ReducedSystem m(op, eta);
    const auto e = op.energy();
    r.psi = detail::resolvent_apply(op, m, e, phi.psi1, phi.psi2);
    const auto [a1, a2] = op.apply(r.psi.psi1, r.psi.psi2);
    const double pn = e.h_norm(phi.psi1, phi.psi2);
    r.residual = pn > 0.0 ? e.h_norm(r.psi.psi1 - eta * a1 - phi.psi1, r.psi.psi2 - eta * a2 - phi.psi2) / pn : 0.0;
    r.ratio = pn > 0.0 ? r.psi.h_norm / pn : 0.0;
    if (eta < c.eta_alpha) {
        r.bound = 1.0 / (1.0 - eta / c.eta_alpha);
        r.bound_holds = r.ratio <= r.bound * (1.0 + bound_tol);
    }
    return r;
}

struct AprioriReport {
    double eta = 0.0;
    double eta_alpha = 0.0;
    double ratio = 0.0;  // ||psi||_s0 * sqrt(2) eta / ||phi||
    bool holds = true;
    std::string warning;
};

// Solves (1 + eta alpha a + eta^2 S0) psi = phi and compares with the a priori bound.
inline AprioriReport check_apriori_bound(const BlockOperator& op, double eta, const Vector& phi, double tol = 1e-10) {
    const auto c = semigroup_constants(op);
    AprioriReport r;
    r.eta = eta;
    r.eta_alpha = c.eta_alpha;
    if (!(eta > 0.0) || eta >= c.eta_alpha) {
        r.warning = "eta = " + std::to_string(eta) + " outside (0, eta_alpha = " + std::to_string(c.eta_alpha) + ")";
    }
    const ReducedSystem m(op, eta);
    const auto e = op.energy();
    const Vector psi = m.solve(phi);
    const double pn = e.l2_norm(phi);
    r.ratio = pn > 0.0 ? e.s0_norm(psi) * std::sqrt(2.0) * eta / pn : 0.0;
    r.holds = r.ratio <= 1.0 + tol;
    return r;
}

inline AprioriReport check_apriori_bound(const Grid& grid, const CoefficientSet& coeffs, double alpha, double eta,
                                         const Vector& phi, double tol = 1e-10) {
    return check_apriori_bound(assemble_block(grid, coeffs, alpha), eta, phi, tol);
}

struct EvolutionOptions {
    double renormalize_above = 1e12;
    int record_every = 1;
};

struct EvolutionTrace {
    std::vector<double> t;
    std::vector<double> log_h_norm;  // log ||Psi(t)||_H, renormalisations included
    double dt = 0.0;
    int steps = 0;
    int order = 2;
    std::string scheme = "trapezoidal";
    int renormalizations = 0;
    // Undamped case: max |E(t) - E(0)| / E(0) for E = psi1^T S0 psi1 + |psi2|^2.
    double energy_drift = std::numeric_limits<double>::quiet_NaN();
    StateVector final_state;  // scaled by exp(-accumulated log factor)

    std::size_t samples() const { return t.size(); }
    double h_norm(std::size_t i) const { return std::exp(log_h_norm[i]); }
};

inline double default_time_step(const BlockOperator& op) {
    return std::min(0.1 * semigroup_constants(op).eta_alpha, 1e-2);
}

// Trapezoidal rule (I - dt/2 A) Psi_{k+1} = (I + dt/2 A) Psi_k.
inline EvolutionTrace evolve(const BlockOperator& op, const StateVector& psi0, double T, double dt,
                             const EvolutionOptions& opts = {}) {
    if (!(dt > 0.0) || !(T >= dt)) throw DomainError("evolve needs dt > 0 and T >= dt");
    if (!psi0.psi1.allFinite() || !psi0.psi2.allFinite()) throw DomainError("initial state is not finite");
    if (psi0.psi1.size() != op.n() || psi0.psi2.size() != op.n()) throw DomainError("initial state size mismatch");
    const double eta = 0.5 * dt;
    const auto e = op.energy();
    const ReducedSystem m(op, eta);
    EvolutionTrace tr;
    tr.dt = dt;
    tr.steps = static_cast<int>(std::llround(T / dt));
    StateVector s = StateVector::make(e, psi0.psi1, psi0.psi2);
    if (!(s.h_norm > 0.0)) throw DomainError("initial state has zero energy norm");
    double log_scale = 0.0;
    const bool undamped = op.alpha() == 0.0;
    const auto energy = [&](const StateVector& x) { return x.psi1.dot(op.s0().apply(x.psi1)) + x.psi2.squaredNorm(); };
    const double e0 = energy(s);
    double drift = 0.0;
    tr.t.push_back(0.0);
    tr.log_h_norm.push_back(std::log(s.h_norm));
    for (int k = 1; k <= tr.steps; ++k) {
        const auto [a1, a2] = op.apply(s.psi1, s.psi2);
        const Vector r1 = s.psi1 + eta * a1;
        const Vector r2 = s.psi2 + eta * a2;
        try {
            s = detail::resolvent_apply(op, m, e, r1, r2);
        } catch (const SolverError& err) {
            throw SolverError(std::string(err.what()) + " at step " + std::to_string(k), err.best_residual());
        }
        if (!std::isfinite(s.h_norm)) {
            throw SolverError("state norm overflowed at step " + std::to_string(k), std::numeric_limits<double>::infinity());
        }
        if (undamped && e0 != 0.0) drift = std::max(drift, std::abs(energy(s) * std::exp(2.0 * log_scale) - e0) / std::abs(e0));
        if (k % opts.record_every == 0 || k == tr.steps) {
            tr.t.push_back(k * dt);
            tr.log_h_norm.push_back(std::log(s.h_norm) + log_scale);
        }
        if (s.h_norm > opts.renormalize_above) {
            log_scale += std::log(s.h_norm);
            s.psi1 /= s.h_norm;
            s.psi2 /= s.h_norm;
            s.h_norm = 1.0;
            ++tr.renormalizations;
        }
    }
    if (undamped) tr.energy_drift = drift;
    tr.final_state = std::move(s);
    return tr;
}

// Least-squares slope of log ||Psi(t)||_H over the last tail_fraction of the trace.
inline double growth_rate(const EvolutionTrace& tr, double tail_fraction = 0.5) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw DomainError("tail fraction must lie in (0, 1]");
    const std::size_t n = tr.samples();
    if (n == 0) throw RangeError("empty trace");
    const auto first = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(n - 1)));
    if (n - first < 10) {
        throw RangeError("growth window holds " + std::to_string(n - first) + " samples; need 10 (lengthen T or record more often)");
    }
    double st = 0.0, sy = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        if (!std::isfinite(tr.log_h_norm[i])) {
            throw RangeError("norm underflow or overflow in the growth window; shorten T or lower the renormalisation threshold");
        }
        st += tr.t[i];
        sy += tr.log_h_norm[i];
    }
    const double cnt = static_cast<double>(n - first);
    st /= cnt;
    sy /= cnt;
    double num = 0.0, den = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        num += (tr.t[i] - st) * (tr.log_h_norm[i] - sy);
        den += (tr.t[i] - st) * (tr.t[i] - st);
    }
    return num / den;
}

struct GrowthStudy {
    double dt = 0.0;
    double rate = 0.0;       // at dt
    double rate_half = 0.0;  // at dt / 2
    double extrapolated = 0.0;  // Richardson, second order
    double difference = 0.0;    // |rate - rate_half|
};

inline GrowthStudy growth_refinement(const BlockOperator& op, const StateVector& psi0, double T, double dt,
                                     double tail_fraction = 0.5) {
    GrowthStudy g;
    g.dt = dt;
    g.rate = growth_rate(evolve(op, psi0, T, dt), tail_fraction);
    EvolutionOptions o;
    o.record_every = 2;
    g.rate_half = growth_rate(evolve(op, psi0, T, 0.5 * dt, o), tail_fraction);
    g.extrapolated = (4.0 * g.rate_half - g.rate) / 3.0;
    g.difference = std::abs(g.rate - g.rate_half);
    return g;
}

struct SemigroupBoundReport {
    double omega_alpha = 0.0;
    // Largest log(h(t) / h(0)) - omega t over the samples.
    double worst_excess = -std::numeric_limits<double>::infinity();
    int violations = 0;            // beyond the continuous bound e^{omega t} (1 + tol)
    int certified_violations = 0;  // beyond the discrete bound ((1 + eta omega) / (1 - eta omega))^k
    bool ok() const { return certified_violations == 0; }
};

// The trapezoidal step is r(A) with r(z) = (1 + eta z) / (1 - eta z); when
// A - omega is dissipative, ||r(A)|| <= (1 + eta omega) / (1 - eta omega),
// which exceeds e^{2 eta omega} by the scheme's certified error.
inline SemigroupBoundReport check_semigroup_bound(const EvolutionTrace& tr, const SemigroupConstants& c,
                                                  double tol = 1e-10) {
    SemigroupBoundReport r;
    r.omega_alpha = c.omega_alpha;
    const double eta = 0.5 * tr.dt;
    const double x = eta * c.omega_alpha;
    const double per_step = x < 1.0 ? std::log((1.0 + x) / (1.0 - x)) : std::numeric_limits<double>::infinity();
    const double l0 = tr.log_h_norm.front();
    for (std::size_t i = 0; i < tr.samples(); ++i) {
        const double growth = tr.log_h_norm[i] - l0;
        const double excess = growth - c.omega_alpha * tr.t[i];
        r.worst_excess = std::max(r.worst_excess, excess);
        if (excess > std::log1p(tol)) ++r.violations;
        const double steps = std::round(tr.t[i] / tr.dt);
        if (growth > steps * per_step + std::log1p(tol)) ++r.certified_violations;
    }
    return r;
}

}  // namespace dampwave
