#pragma once

// Sampled eigencurves mu -> gamma_n(mu) of the family S_mu, together with
// the essential-threshold row and a discrete/essential classification.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dampwave/coefficients.hpp"
#include "dampwave/error.hpp"
#include "dampwave/grid.hpp"
#include "dampwave/schrodinger.hpp"
#include "dampwave/spectra.hpp"

namespace dampwave {

enum class SpectralClass { Discrete, Ambiguous, Essential };

inline const char* to_string(SpectralClass c) {
    switch (c) {
        case SpectralClass::Discrete: return "discrete";
        case SpectralClass::Ambiguous: return "ambiguous";
        case SpectralClass::Essential: return "essential";
    }
    return "?";
}

// A value is discrete when it lies clearly below the (confinement
// corrected) exterior threshold, essential when clearly above it.
inline SpectralClass classify_value(double gamma, double threshold, double tol) {
    if (!std::isfinite(threshold)) return SpectralClass::Discrete;
    if (gamma < threshold - tol) return SpectralClass::Discrete;
    if (gamma >= threshold + tol) return SpectralClass::Essential;
    return SpectralClass::Ambiguous;
}

namespace detail {

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. The
// first exception thrown by any worker is rethrown.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct CurveSamplerOptions {
    int k = 4;
    EigenSolveOptions eigen;
    // Exterior radii as fractions of the truncation radius.
    std::vector<double> radius_fractions{0.5, 0.6, 0.7, 0.8};
    // Half-width of the ambiguous band around the essential threshold.
    double classification_tol = 1e-3;
};

// Evaluates slices of the family at arbitrary mu. Immutable and safe to
// share between threads.
class CurveSampler {
public:
    CurveSampler(Grid grid, CoefficientSet coeffs, CurveSamplerOptions opts = {})
        : grid_(std::move(grid)), coeffs_(std::move(coeffs)), opts_(std::move(opts)) {
        if (opts_.k < 1) throw DomainError("curve count k must be at least 1");
        if (opts_.k > grid_.size()) {
            throw DomainError("curve count k = " + std::to_string(opts_.k) + " exceeds the " +
                              std::to_string(grid_.size()) + " grid unknowns");
        }
        if (grid_.has_truncated_axis()) {
            const double r = grid_.min_truncation_radius();
            for (double f : opts_.radius_fractions) radii_.push_back(f * r);
        }
    }

    const Grid& grid() const { return grid_; }
    const CoefficientSet& coefficients() const { return coeffs_; }
    const CurveSamplerOptions& options() const { return opts_; }
    int k() const { return opts_.k; }
    bool truncated() const { return grid_.has_truncated_axis(); }

    SymmetricOperator op(double mu) const { return assemble_schrodinger(grid_, coeffs_, mu); }

    // The lowest `count` eigenvalues (default k).
    SpectrumSlice slice(double mu, int count = 0) const {
        try {
            auto s = lowest_eigenvalues(op(mu), count > 0 ? count : opts_.k, opts_.eigen);
            s.mu = mu;
            return s;
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + " at mu = " + std::to_string(mu), e.best_residual());
        }
    }

    double curve_value(int n, double mu) const { return slice(mu, n + 1).eigenvalues.back(); }

    // Slopes d gamma_n / d mu = v_n^T diag(a) v_n of the lowest k curves.
    std::vector<double> slopes(double mu) const {
        EigenSolveOptions o = opts_.eigen;
        o.keep_vectors = true;
        const auto s = lowest_eigenvalues(op(mu), opts_.k, o);
        const Eigen::Map<const Eigen::VectorXd> a(coeffs_.a.data(), static_cast<Eigen::Index>(coeffs_.a.size()));
        std::vector<double> d;
        for (int n = 0; n < s.eigenvectors.cols(); ++n) {
            const auto v = s.eigenvectors.col(n);
            d.push_back(v.dot(a.cwiseProduct(v)) / v.squaredNorm());
        }
        return d;
    }

    std::optional<EssentialEstimate> essential(double mu) const {
        if (!truncated()) return std::nullopt;
        return essential_threshold_estimate(grid_, coeffs_, mu, radii_, opts_.eigen);
    }

    NearestEigenvalue nearest(double mu, double target) const { return nearest_eigenvalue(op(mu), target, opts_.eigen); }

    SpectralClass classify(double gamma, const std::optional<EssentialEstimate>& ess) const {
        if (!ess) return SpectralClass::Discrete;
        return classify_value(gamma, ess->lower, opts_.classification_tol);
    }

private:
    Grid grid_;
    CoefficientSet coeffs_;
    CurveSamplerOptions opts_;
    std::vector<double> radii_;
};

struct EigencurveTable {
    std::vector<double> mu;
    // curves[n][i] = gamma_{n+1}(mu[i])
    std::vector<std::vector<double>> curves;
    std::vector<double> max_residual;
    // Essential row (empty on bounded domains): the exterior value at the
    // largest radius and the confinement-corrected lower estimate.
    std::vector<double> essential;
    std::vector<double> essential_lower;
    std::vector<double> essential_spread;
    std::vector<std::vector<SpectralClass>> mask;
    double lipschitz_bound = 0.0;
    double solver_tol = 1e-8;
    std::shared_ptr<const CurveSampler> source;

    int k() const { return static_cast<int>(curves.size()); }
    int samples() const { return static_cast<int>(mu.size()); }
    bool has_essential() const { return !essential.empty(); }
    double gamma(int n, int i) const { return curves[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)]; }

    std::optional<int> index_of(double m) const {
        const auto it = std::lower_bound(mu.begin(), mu.end(), m);
        if (it != mu.end() && *it == m) return static_cast<int>(it - mu.begin());
        return std::nullopt;
    }
    double mu_min() const { return mu.front(); }
    double mu_max() const { return mu.back(); }
};

namespace detail {

struct CurveSample {
    double mu = 0.0;
    SpectrumSlice slice;
    std::optional<EssentialEstimate> ess;
};

inline std::vector<CurveSample> evaluate_samples(const CurveSampler& sampler, const std::vector<double>& mus) {
    std::vector<CurveSample> out(mus.size());
    parallel_for(static_cast<int>(mus.size()), [&](int i) {
        auto& s = out[static_cast<std::size_t>(i)];
        s.mu = mus[static_cast<std::size_t>(i)];
        s.slice = sampler.slice(s.mu);
        s.ess = sampler.essential(s.mu);
    });
    return out;
}

inline EigencurveTable assemble_table(std::shared_ptr<const CurveSampler> sampler, std::vector<CurveSample> samples) {
    std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.mu < b.mu; });
    samples.erase(std::unique(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.mu == b.mu; }),
                  samples.end());
    EigencurveTable t;
    const int k = sampler->k();
    t.curves.assign(static_cast<std::size_t>(k), {});
    t.mask.assign(static_cast<std::size_t>(k), {});
    for (const auto& s : samples) {
        t.mu.push_back(s.mu);
        t.max_residual.push_back(s.slice.max_residual());
        for (int n = 0; n < k; ++n) {
            const double g = s.slice.eigenvalues[static_cast<std::size_t>(n)];
            t.curves[static_cast<std::size_t>(n)].push_back(g);
            t.mask[static_cast<std::size_t>(n)].push_back(sampler->classify(g, s.ess));
        }
        if (s.ess) {
            t.essential.push_back(s.ess->gamma_inf);
            t.essential_lower.push_back(s.ess->lower);
            t.essential_spread.push_back(s.ess->spread);
        }
    }
    t.lipschitz_bound = sampler->coefficients().a_sup_norm();
    t.solver_tol = sampler->options().eigen.tol;
    t.source = std::move(sampler);
    return t;
}

inline std::vector<CurveSample> table_samples(const EigencurveTable& t) {
    std::vector<CurveSample> out;
    for (int i = 0; i < t.samples(); ++i) {
        CurveSample s;
        s.mu = t.mu[static_cast<std::size_t>(i)];
        s.slice.mu = s.mu;
        for (int n = 0; n < t.k(); ++n) s.slice.eigenvalues.push_back(t.gamma(n, i));
        s.slice.residuals.assign(static_cast<std::size_t>(t.k()), t.max_residual[static_cast<std::size_t>(i)]);
        if (t.has_essential()) {
            EssentialEstimate e;
            e.mu = s.mu;
            e.gamma_inf = t.essential[static_cast<std::size_t>(i)];
            e.lower = t.essential_lower[static_cast<std::size_t>(i)];
            e.spread = t.essential_spread[static_cast<std::size_t>(i)];
            s.ess = e;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

// Returns a copy of the table with the extra mu values evaluated and merged.
inline EigencurveTable with_samples(const EigencurveTable& table, const std::vector<double>& extra) {
    if (!table.source) throw DomainError("eigencurve table has no sampler attached; cannot add samples");
    std::vector<double> fresh;
    for (double m : extra)
        if (!table.index_of(m)) fresh.push_back(m);
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
    auto samples = detail::table_samples(table);
    auto added = detail::evaluate_samples(*table.source, fresh);
    samples.insert(samples.end(), std::make_move_iterator(added.begin()), std::make_move_iterator(added.end()));
    return detail::assemble_table(table.source, std::move(samples));
}

struct MuRange {
    double lower = -1.0;
    double upper = 1.0;
};

// [-alpha^2 G, alpha^2 G] with G = max(1, |gamma_1(0)|, ||a||^2).
inline MuRange default_mu_range(double gamma1_at_zero, double a_sup, double alpha) {
    const double g = std::max({1.0, std::abs(gamma1_at_zero), a_sup * a_sup});
    // Past m_cert, gamma_1(mu) >= gamma_1(0) - a_sup |mu| keeps curve 1 above -mu^2 / alpha^2.
    const double a2 = alpha * alpha;
    const double m_cert =
        0.5 * (a2 * a_sup + std::sqrt(a2 * a2 * a_sup * a_sup + 4.0 * a2 * std::max(0.0, -gamma1_at_zero)));
    const double m = std::max(a2 * g, 1.001 * m_cert);
    return {-m, m};
}

inline EigencurveTable sample_eigencurves(std::shared_ptr<const CurveSampler> sampler, MuRange range, int samples) {
    if (samples < 2) throw DomainError("need at least 2 mu samples, got " + std::to_string(samples));
    if (!(range.upper > range.lower) || !std::isfinite(range.lower) || !std::isfinite(range.upper)) {
        throw DomainError("mu range must be a finite interval with upper > lower");
    }
    std::vector<double> mus;
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / (samples - 1);
        mus.push_back(i + 1 == samples ? range.upper : range.lower + t * (range.upper - range.lower));
    }
    if (range.lower < 0.0 && range.upper > 0.0) {
        mus.push_back(0.0);  // count_real_points needs the mu = 0 slice
    }
    return detail::assemble_table(sampler, detail::evaluate_samples(*sampler, mus));
}

inline EigencurveTable sample_eigencurves(const Grid& grid, const CoefficientSet& coeffs, MuRange range, int samples,
                                          int k, const EigenSolveOptions& opts = {}) {
    CurveSamplerOptions o;
    o.k = k;
    o.eigen = opts;
    return sample_eigencurves(std::make_shared<const CurveSampler>(grid, coeffs, o), range, samples);
}

struct LipschitzViolation {
    int curve = 0;
    int sample = 0;  // left end of the offending pair
    double change = 0.0;
    double bound = 0.0;
};

struct LipschitzReport {
    int pairs_checked = 0;
    double worst_ratio = 0.0;  // max |dgamma| / (||a|| |dmu| + slack)
    std::vector<LipschitzViolation> violations;
    bool ok() const { return violations.empty(); }
};

inline LipschitzReport check_lipschitz(const EigencurveTable& t, double slack = -1.0) {
    if (slack < 0.0) slack = 2.0 * t.solver_tol;
    LipschitzReport r;
    for (int n = 0; n < t.k(); ++n) {
        for (int i = 0; i + 1 < t.samples(); ++i) {
            const double change = std::abs(t.gamma(n, i + 1) - t.gamma(n, i));
            const double bound = t.lipschitz_bound * (t.mu[static_cast<std::size_t>(i + 1)] - t.mu[static_cast<std::size_t>(i)]) + slack;
            ++r.pairs_checked;
            r.worst_ratio = std::max(r.worst_ratio, change / bound);
            if (change > bound) r.violations.push_back({n, i, change, bound});
        }
    }
    return r;
}

// Ordering check gamma_n <= gamma_{n+1} at every sample.
inline bool rows_ordered(const EigencurveTable& t) {
    for (int n = 0; n + 1 < t.k(); ++n)
        for (int i = 0; i < t.samples(); ++i)
            if (t.gamma(n, i) > t.gamma(n + 1, i)) return false;
    return true;
}

struct AsymptoticSlope {
    int curve = 0;
    int side = 1;
    double mu = 0.0;        // extreme sample used
    double ratio = 0.0;     // gamma_n(mu) / mu
    double slope = 0.0;     // difference quotient of the last pair
    double previous_slope = 0.0;
    double error = 0.0;     // |slope - previous_slope|
    double onset = 0.0;
    std::string note;
};

// Slope of curve n (0-based) at the extreme samples of the given side. The
// onset default 100 ||a||_inf is a toolkit choice.
inline AsymptoticSlope asymptotic_slope(const EigencurveTable& t, int n, int side, double onset = 0.0) {
    if (n < 0 || n >= t.k()) throw DomainError("curve index out of range");
    if (side != 1 && side != -1) throw DomainError("side must be +1 or -1");
    if (onset <= 0.0) onset = 100.0 * std::max(t.lipschitz_bound, std::numeric_limits<double>::min());
    if (t.samples() < 3) throw RangeError("eigencurve table needs at least 3 samples for a slope estimate");
    const int last = side > 0 ? t.samples() - 1 : 0;
    const int step = side > 0 ? -1 : 1;
    const auto m = [&](int i) { return t.mu[static_cast<std::size_t>(i)]; };
    if (side * m(last) < onset) {
        throw RangeError("eigencurve table reaches |mu| = " + std::to_string(std::abs(m(last))) +
                         " on this side, below the asymptotic onset " + std::to_string(onset));
    }
    const int i1 = last + step;
    const int i2 = last + 2 * step;
    if (side * m(i2) <= 0.0) throw RangeError("not enough samples on the requested side for a slope estimate");
    AsymptoticSlope s;
    s.curve = n;
    s.side = side;
    s.mu = m(last);
    s.onset = onset;
    s.ratio = t.gamma(n, last) / m(last);
    s.slope = (t.gamma(n, last) - t.gamma(n, i1)) / (m(last) - m(i1));
    s.previous_slope = (t.gamma(n, i1) - t.gamma(n, i2)) / (m(i1) - m(i2));
    s.error = std::abs(s.slope - s.previous_slope);
    s.note = "asymptotic onset |mu| >= " + std::to_string(onset) + " is a heuristic; no rate is known";
    return s;
}

}  // namespace dampwave
