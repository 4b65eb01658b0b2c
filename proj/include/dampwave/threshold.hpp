#pragma once

// Instability thresholds alpha_n on either side of the spectrum, counts of
// predicted real spectral points, and the essential interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "dampwave/eigencurve.hpp"
#include "dampwave/error.hpp"
#include "dampwave/intersection.hpp"

namespace dampwave {

enum class ThresholdMechanism { NegativeCrossing, Tangency, NotFound };

inline const char* to_string(ThresholdMechanism m) {
    switch (m) {
        case ThresholdMechanism::NegativeCrossing: return "negative-crossing";
        case ThresholdMechanism::Tangency: return "tangency";
        case ThresholdMechanism::NotFound: return "not-found";
    }
    return "?";
}

struct ThresholdRecord {
    int curve = 0;  // 0-based
    int side = 1;
    double alpha_threshold = std::numeric_limits<double>::infinity();
    double witness_mu = 0.0;
    double gamma_at_witness = 0.0;
    ThresholdMechanism mechanism = ThresholdMechanism::NotFound;
    // alpha = 0+ : the curve starts below zero, so the point exists for
    // every alpha > 0.
    bool zero_plus = false;
    // min |mu| / sqrt(-gamma_n(mu)) over the side; equals the tangency
    // threshold, reported for both mechanisms as a cross-check.
    double formula_alpha = std::numeric_limits<double>::infinity();
    // Final bisection bracket in alpha (tangency mechanism only).
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    // The minimiser sits at the end of the sampled range, so the true
    // threshold may be smaller; widen the mu range.
    bool range_limited = false;
    std::string note;

    bool found() const { return mechanism != ThresholdMechanism::NotFound; }
};

struct ThresholdOptions {
    double rel_tol = 1e-9;
    IntersectOptions intersect;
};

namespace detail {

struct FormulaMin {
    double alpha = std::numeric_limits<double>::infinity();
    double mu = 0.0;
    double gamma = 0.0;
};

// min over mu on the side with gamma_n(mu) < bound(mu) of |mu| / sqrt(-gamma_n(mu)),
// refined by a local minimisation around the best sample.
template <class Admissible, class AdmissibleAt>
FormulaMin formula_threshold(const EigencurveTable& t, int n, int side, Admissible admissible,
                             AdmissibleAt admissible_at) {
    FormulaMin best;
    int best_i = -1;
    for (int i = 0; i < t.samples(); ++i) {
        const double m = t.mu[static_cast<std::size_t>(i)];
        const double g = t.gamma(n, i);
        if (side * m <= 0.0 || !(g < 0.0) || !admissible(i, g)) continue;
        const double v = std::abs(m) / std::sqrt(-g);
        if (v < best.alpha) {
            best = {v, m, g};
            best_i = i;
        }
    }
    if (best_i < 0 || !t.source) return best;
    const double lo = t.mu[static_cast<std::size_t>(std::max(0, best_i - 1))];
    const double hi = t.mu[static_cast<std::size_t>(std::min(t.samples() - 1, best_i + 1))];
    const auto objective = [&](double m) {
        if (side * m <= 0.0) return std::numeric_limits<double>::infinity();
        const double g = t.source->curve_value(n, m);
        if (!(g < 0.0) || !admissible_at(m, g)) return std::numeric_limits<double>::infinity();
        return std::abs(m) / std::sqrt(-g);
    };
    std::uintmax_t iters = 80;
    const auto [m, v] = boost::math::tools::brent_find_minima(objective, lo, hi, 40, iters);
    if (v < best.alpha) best = {v, m, t.source->curve_value(n, m)};
    return best;
}

// Admissibility for the crossing mechanism: gamma_n below min(0, essential row).
inline auto crossing_admissible(const EigencurveTable& t, bool tangency_regime) {
    return std::pair{[&t, tangency_regime](int i, double g) {
                         if (tangency_regime || !t.has_essential()) return true;
                         return g < std::min(0.0, t.essential_lower[static_cast<std::size_t>(i)]);
                     },
                     [&t, tangency_regime](double m, double g) {
                         if (tangency_regime || !t.has_essential()) return true;
                         const auto e = t.source->essential(m);
                         return e ? g < std::min(0.0, e->lower) : true;
                     }};
}

inline bool essential_positive_on_side(const EigencurveTable& t, int side) {
    if (!t.has_essential()) return true;
    for (int i = 0; i < t.samples(); ++i)
        if (side * t.mu[static_cast<std::size_t>(i)] >= 0.0 && !(t.essential_lower[static_cast<std::size_t>(i)] > 0.0))
            return false;
    return true;
}

inline int zero_index(const EigencurveTable& t) {
    const auto i = t.index_of(0.0);
    if (!i) throw RangeError("eigencurve table has no mu = 0 sample");
    return *i;
}

inline bool crosses(const EigencurveTable& t, int n, int side, double alpha, const IntersectOptions& base) {
    IntersectOptions o = base;
    o.curves = {n};
    o.side = side;
    o.include_essential = false;
    for (const auto& r : intersect_all(t, alpha, o))
        if (!r.out_of_range()) return true;
    return false;
}

}  // namespace detail

// Threshold for curve n (0-based) on the given side (+1: mu > 0, positive
// spectrum; -1: mu < 0, negative spectrum).
inline ThresholdRecord thresholds(const EigencurveTable& table, int n, int side, const ThresholdOptions& opts = {}) {
    if (n < 0 || n >= table.k()) throw DomainError("curve index out of range");
    if (side != 1 && side != -1) throw DomainError("side must be +1 or -1");
    ThresholdRecord r;
    r.curve = n;
    r.side = side;
    const int z = detail::zero_index(table);
    const double g0 = table.gamma(n, z);

    if (g0 < 0.0) {
        r.mechanism = ThresholdMechanism::NegativeCrossing;
        r.zero_plus = true;
        r.alpha_threshold = 0.0;
        r.formula_alpha = 0.0;
        r.witness_mu = 0.0;
        r.gamma_at_witness = g0;
        r.note = "gamma_n(0) < 0: real point present for every alpha > 0";
        return r;
    }

    const bool tangency_regime = detail::essential_positive_on_side(table, side);
    const auto [adm, adm_at] = detail::crossing_admissible(table, tangency_regime);
    const auto fm = detail::formula_threshold(table, n, side, adm, adm_at);
    r.formula_alpha = fm.alpha;
    if (!std::isfinite(fm.alpha)) {
        r.note = tangency_regime ? "curve stays non-negative on the sampled side"
                                 : "curve never drops below min(0, gamma_inf) on the sampled side";
        return r;
    }
    const double edge = side > 0 ? table.mu_max() : table.mu_min();
    if (std::abs(fm.mu) >= (1.0 - 1e-9) * std::abs(edge)) {
        r.range_limited = true;
        r.note = "minimiser at the end of the sampled mu range; the value is an upper bound";
    }
    if (!tangency_regime) {
        r.mechanism = ThresholdMechanism::NegativeCrossing;
        r.alpha_threshold = fm.alpha;
        r.witness_mu = fm.mu;
        r.gamma_at_witness = fm.gamma;
        return r;
    }

    // First touching of curve and parabola, bisected in alpha.
    double lo = fm.alpha * (1.0 - 1e-3);
    double hi = fm.alpha * (1.0 + 1e-3);
    for (int i = 0; i < 40 && detail::crosses(table, n, side, lo, opts.intersect); ++i) lo *= 0.5;
    for (int i = 0; i < 40 && !detail::crosses(table, n, side, hi, opts.intersect); ++i) hi *= 2.0;
    if (!detail::crosses(table, n, side, hi, opts.intersect)) {
        r.note = "no intersection found up to alpha = " + std::to_string(hi);
        return r;
    }
    while (hi - lo > opts.rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (detail::crosses(table, n, side, mid, opts.intersect)) hi = mid;
        else lo = mid;
    }
    r.mechanism = ThresholdMechanism::Tangency;
    r.alpha_threshold = hi;
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    IntersectOptions o = opts.intersect;
    o.curves = {n};
    o.side = side;
    o.include_essential = false;
    double sum = 0.0;
    int cnt = 0;
    for (const auto& rec : intersect_all(table, hi, o))
        if (!rec.out_of_range()) {
            sum += rec.mu_star;
            ++cnt;
        }
    r.witness_mu = cnt ? sum / cnt : fm.mu;
    r.gamma_at_witness = table.source ? table.source->curve_value(n, r.witness_mu) : fm.gamma;
    return r;
}

struct SideCount {
    int predicted = 0;  // curve intersections, tangencies counted twice
    int discrete = 0;
    int ambiguous = 0;
    int essential_class = 0;
    int out_of_range = 0;
    bool essential_points = false;  // essential row meets the parabola here
    int guaranteed = 0;
    std::string guarantee;
    bool guarantee_met = true;
};

struct RealPointCounts {
    double alpha = 0.0;
    int n0 = 0;
    bool n0_saturated = false;  // every computed curve is negative at mu = 0
    SideCount positive;
    SideCount negative;
    std::vector<IntersectionRecord> records;
    std::vector<double> thresholds_positive;
    std::vector<double> thresholds_negative;
};

inline RealPointCounts count_real_points(const EigencurveTable& table, double alpha,
                                         const IntersectOptions& opts = {}) {
    RealPointCounts c;
    c.alpha = alpha;
    const int z = detail::zero_index(table);
    for (int n = 0; n < table.k(); ++n) {
        const double g = table.gamma(n, z);
        const double thr = table.has_essential() ? table.essential_lower[static_cast<std::size_t>(z)]
                                                 : std::numeric_limits<double>::infinity();
        const auto cls = table.mask[static_cast<std::size_t>(n)][static_cast<std::size_t>(z)];
        if (g < 0.0 && g < thr && cls == SpectralClass::Discrete) ++c.n0;
    }
    c.n0_saturated = c.n0 == table.k();
    c.records = intersect_all(table, alpha, opts);

    for (const auto& r : c.records) {
        if (r.lambda == 0.0 && !r.out_of_range()) continue;
        SideCount& s = r.mu_star > 0.0 ? c.positive : c.negative;
        if (r.out_of_range()) {
            ++s.out_of_range;
            continue;
        }
        if (r.essential()) {
            s.essential_points = true;
            continue;
        }
        s.predicted += r.multiplicity();
        switch (r.classification) {
            case SpectralClass::Discrete: s.discrete += r.multiplicity(); break;
            case SpectralClass::Ambiguous: s.ambiguous += r.multiplicity(); break;
            case SpectralClass::Essential: s.essential_class += r.multiplicity(); break;
        }
    }

    for (int side : {1, -1}) {
        SideCount& s = side > 0 ? c.positive : c.negative;
        auto& thr = side > 0 ? c.thresholds_positive : c.thresholds_negative;
        const bool tangency_regime = detail::essential_positive_on_side(table, side);
        int j = 0;
        for (int n = 0; n < table.k(); ++n) {
            if (table.gamma(n, z) < 0.0) continue;
            const auto [adm, adm_at] = detail::crossing_admissible(table, tangency_regime);
            const auto fm = detail::formula_threshold(table, n, side, adm, adm_at);
            thr.push_back(fm.alpha);
            if (tangency_regime ? fm.alpha < alpha : fm.alpha <= alpha) ++j;
        }
        const char* sign = side > 0 ? "positive" : "negative";
        if (tangency_regime) {
            s.guaranteed = 2 * j + c.n0;
            s.guarantee = "alpha past " + std::to_string(j) + " tangency thresholds => at least 2*" + std::to_string(j) +
                          " + N0 = " + std::to_string(s.guaranteed) + " " + sign + " eigenvalues";
        } else {
            s.guaranteed = j + c.n0;
            s.guarantee = "alpha past " + std::to_string(j) + " crossing thresholds => at least " + std::to_string(j) +
                          " + N0 = " + std::to_string(s.guaranteed) + " " + sign + " eigenvalues";
        }
        s.guarantee_met = s.predicted >= s.guaranteed;
    }
    return c;
}

struct EssentialInterval {
    double lower = 0.0;
    double upper = 0.0;
    double delta = 0.0;
};

// Real interval of essential spectrum for asymptotically constant a:
// the roots of x^2 + alpha a_inf x + gamma_inf_0 = 0 when they are real.
inline std::optional<EssentialInterval> essential_interval(double gamma_inf_0, double a_inf, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    const double delta = alpha * alpha * a_inf * a_inf - 4.0 * gamma_inf_0;
    if (delta < 0.0) return std::nullopt;
    const double b = alpha * a_inf;
    const double q = -0.5 * (b + std::copysign(std::sqrt(delta), b));
    if (q == 0.0) return EssentialInterval{0.0, 0.0, delta};
    const double r1 = q;
    const double r2 = gamma_inf_0 / q;
    return EssentialInterval{std::min(r1, r2), std::max(r1, r2), delta};
}

}  // namespace dampwave
