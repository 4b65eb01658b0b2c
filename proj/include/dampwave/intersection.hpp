#pragma once

// Intersections of the eigencurves (and the essential row) with the
// parabola mu -> -(mu / alpha)^2, i.e. zeros of
//     f_n(mu) = gamma_n(mu) + (mu / alpha)^2.
// Each zero mu* gives the real spectral point lambda = mu* / alpha.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "dampwave/eigencurve.hpp"
#include "dampwave/error.hpp"

namespace dampwave {

enum class IntersectionKind { Transversal, Tangency, EssentialEndpoint, OutOfRange };

inline const char* to_string(IntersectionKind k) {
    switch (k) {
        case IntersectionKind::Transversal: return "transversal";
        case IntersectionKind::Tangency: return "tangency";
        case IntersectionKind::EssentialEndpoint: return "essential-endpoint";
        case IntersectionKind::OutOfRange: return "out-of-range";
    }
    return "?";
}

struct IntersectionRecord {
    static constexpr int kEssential = -1;

    int curve = 0;  // 0-based curve index, kEssential for the essential row
    double alpha = 0.0;
    double mu_star = 0.0;
    double lambda = 0.0;
    IntersectionKind kind = IntersectionKind::Transversal;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double residual = 0.0;  // |f(mu*)|
    SpectralClass classification = SpectralClass::Discrete;
    std::string note;

    bool essential() const { return curve == kEssential; }
    bool out_of_range() const { return kind == IntersectionKind::OutOfRange; }
    // Multiplicity as a zero of f: a tangency is a double zero.
    int multiplicity() const { return kind == IntersectionKind::Tangency ? 2 : 1; }
};

struct IntersectOptions {
    double root_tol = 1e-10;
    double tangency_tol = 1e-6;
    // Curves to intersect (0-based); empty means all curves of the table.
    std::vector<int> curves;
    bool include_essential = true;
    // 0: whole range, +1: mu > 0 only, -1: mu < 0 only.
    int side = 0;
    // Refinement levels below the table spacing before switching to a
    // local minimisation of |f| on an uncertified interval.
    int split_depth = 6;
    int max_evaluations = 4000;
    // Relative deviation under which the essential row counts as linear.
    double linear_tol = 1e-6;
};

struct IntersectionSet {
    std::vector<IntersectionRecord> records;
    int evaluations = 0;
    // Same-sign intervals the Lipschitz bound could not clear and whose
    // minimum of |f| stayed above the tangency threshold.
    int uncertified = 0;
};

namespace detail {

class IntersectionSearch {
public:
    IntersectionSearch(const EigencurveTable& t, double alpha, const IntersectOptions& o)
        : table_(t), alpha_(alpha), opts_(o) {
        for (int i = 0; i < t.samples(); ++i) {
            const double m = t.mu[static_cast<std::size_t>(i)];
            std::vector<double> g;
            for (int n = 0; n < t.k(); ++n) g.push_back(t.gamma(n, i));
            gamma_cache_[m] = std::move(g);
            if (t.has_essential()) ess_cache_[m] = t.essential_lower[static_cast<std::size_t>(i)];
        }
    }

    IntersectionSet run() {
        IntersectionSet out;
        std::vector<int> curves = opts_.curves;
        if (curves.empty())
            for (int n = 0; n < table_.k(); ++n) curves.push_back(n);
        for (int n : curves) {
            if (n < 0 || n >= table_.k()) throw DomainError("curve index " + std::to_string(n) + " outside table");
            scan(n, out);
        }
        if (opts_.include_essential && table_.has_essential()) essential_records(out);
        out.evaluations = evaluations_;
        std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
            return a.curve != b.curve ? a.curve < b.curve : a.mu_star < b.mu_star;
        });
        return out;
    }

private:
    double parabola(double m) const { return m * m / (alpha_ * alpha_); }

    double gamma(int n, double m) {
        auto it = gamma_cache_.find(m);
        if (it == gamma_cache_.end()) {
            ++evaluations_;
            it = gamma_cache_.emplace(m, table_.source->slice(m).eigenvalues).first;
        }
        return it->second[static_cast<std::size_t>(n)];
    }

    double essential_value(double m) {
        auto it = ess_cache_.find(m);
        if (it == ess_cache_.end()) {
            ++evaluations_;
            it = ess_cache_.emplace(m, table_.source->essential(m)->lower).first;
        }
        return it->second;
    }

    double f(int n, double m) { return (n == IntersectionRecord::kEssential ? essential_value(m) : gamma(n, m)) + parabola(m); }

    struct Line {
        double c;  // value at mu = 0
        double s;  // slope
        double at(double m) const { return c + s * m; }
    };

    static Line through(double m, double v, double slope) { return {v - slope * m, slope}; }

    // Minimum over [l, r] of max_i L_i + parabola, a convex function: the
    // minimiser is an endpoint, a kink, or a stationary point of one piece.
    double min_upper_envelope(const std::vector<Line>& ls, double l, double r) const {
        const double a2 = alpha_ * alpha_;
        std::vector<double> cand{l, r};
        for (std::size_t i = 0; i < ls.size(); ++i) {
            cand.push_back(-0.5 * ls[i].s * a2);
            for (std::size_t j = i + 1; j < ls.size(); ++j)
                if (ls[i].s != ls[j].s) cand.push_back((ls[j].c - ls[i].c) / (ls[i].s - ls[j].s));
        }
        double best = std::numeric_limits<double>::infinity();
        for (double m : cand) {
            m = std::min(std::max(m, l), r);
            double v = -std::numeric_limits<double>::infinity();
            for (const auto& ln : ls) v = std::max(v, ln.at(m));
            best = std::min(best, v + parabola(m));
        }
        return best;
    }

    // Maximum over [l, r] of min_i L_i + parabola: each piece is convex, so
    // the maximum sits at an endpoint or a kink.
    double max_lower_envelope(const std::vector<Line>& ls, double l, double r) const {
        std::vector<double> cand{l, r};
        for (std::size_t i = 0; i < ls.size(); ++i)
            for (std::size_t j = i + 1; j < ls.size(); ++j)
                if (ls[i].s != ls[j].s) cand.push_back((ls[j].c - ls[i].c) / (ls[i].s - ls[j].s));
        double best = -std::numeric_limits<double>::infinity();
        for (double m : cand) {
            m = std::min(std::max(m, l), r);
            double v = std::numeric_limits<double>::infinity();
            for (const auto& ln : ls) v = std::min(v, ln.at(m));
            best = std::max(best, v + parabola(m));
        }
        return best;
    }

    const std::vector<double>& slopes(double m) {
        auto it = slope_cache_.find(m);
        if (it == slope_cache_.end()) {
            ++evaluations_;
            it = slope_cache_.emplace(m, table_.source->slopes(m)).first;
        }
        return it->second;
    }

    // Partial sums gamma_0 + ... + gamma_n and of their slopes; the sums are
    // concave in mu (Ky Fan), which brackets gamma_n = S_n - S_(n-1).
    double partial_sum(int n, double m) {
        double v = 0.0;
        for (int j = 0; j <= n; ++j) v += gamma(j, m);
        return v;
    }
    double partial_slope(int n, double m) {
        const auto& d = slopes(m);
        double v = 0.0;
        for (int j = 0; j <= n; ++j) v += d[static_cast<std::size_t>(j)];
        return v;
    }

    // Certifies that f keeps the sign of its endpoint values on [l, r].
    // Lower (upper) bounds for gamma come from the Lipschitz cones of the
    // endpoints and, for eigencurves, from concavity of the partial sums;
    // the parabola is added exactly.
    bool certified(int n, double l, double r, double fl, double fr) {
        const double a = table_.lipschitz_bound;
        const double gl = fl - parabola(l);
        const double gr = fr - parabola(r);
        const double margin = 4.0 * table_.solver_tol;
        const bool positive = fl > 0.0;
        const double sgn = positive ? -1.0 : 1.0;
        std::vector<Line> ls{through(l, gl, sgn * a), through(r, gr, -sgn * a)};
        const auto passes = [&] {
            return positive ? min_upper_envelope(ls, l, r) > margin : max_lower_envelope(ls, l, r) < -margin;
        };
        if (passes()) return true;
        if (n == IntersectionRecord::kEssential) return false;
        if (positive) {
            // S_n above its chord, S_(n-1) below its tangents.
            const double sl = partial_sum(n, l);
            const double sr = partial_sum(n, r);
            const Line chord = through(l, sl, (sr - sl) / (r - l));
            if (n == 0) {
                ls.push_back(chord);
            } else {
                const Line tl = through(l, sl - gl, partial_slope(n - 1, l));
                const Line tr = through(r, sr - gr, partial_slope(n - 1, r));
                ls.push_back({chord.c - tl.c, chord.s - tl.s});
                ls.push_back({chord.c - tr.c, chord.s - tr.s});
            }
        } else {
            // S_n below its tangents, S_(n-1) above its chord.
            const double sl = partial_sum(n, l);
            const double sr = partial_sum(n, r);
            const Line tl = through(l, sl, partial_slope(n, l));
            const Line tr = through(r, sr, partial_slope(n, r));
            Line chord{0.0, 0.0};
            if (n > 0) chord = through(l, sl - gl, ((sr - gr) - (sl - gl)) / (r - l));
            ls.push_back({tl.c - chord.c, tl.s - chord.s});
            ls.push_back({tr.c - chord.c, tr.s - chord.s});
        }
        return passes();
    }

    bool in_side(double m) const { return opts_.side == 0 || (opts_.side > 0 ? m > 0.0 : m < 0.0); }

    std::vector<double> sample_points() const {
        std::vector<double> pts;
        for (double m : table_.mu)
            if (opts_.side == 0 || opts_.side * m >= 0.0) pts.push_back(m);
        return pts;
    }

    SpectralClass classify(int n, double m) {
        if (n == IntersectionRecord::kEssential) return SpectralClass::Essential;
        if (!table_.source->truncated()) return SpectralClass::Discrete;
        return table_.source->classify(gamma(n, m), table_.source->essential(m));
    }

    IntersectionRecord make(int n, double m, IntersectionKind kind, double lo, double hi) {
        IntersectionRecord r;
        r.curve = n;
        r.alpha = alpha_;
        r.mu_star = m;
        r.lambda = m / alpha_;
        r.kind = kind;
        r.bracket_lo = lo;
        r.bracket_hi = hi;
        r.residual = kind == IntersectionKind::OutOfRange ? 0.0 : std::abs(f(n, m));
        if (n == IntersectionRecord::kEssential) {
            r.classification = SpectralClass::Essential;
            r.note = "essential (sufficient criterion)";
        } else if (kind != IntersectionKind::OutOfRange) {
            r.classification = classify(n, m);
        }
        return r;
    }

    // Bisection on a sign change; terminates on |f| <= root_tol or when the
    // bracket can no longer be halved.
    void bisect(int n, double l, double r, double fl, IntersectionSet& out) {
        const double lo0 = l;
        const double hi0 = r;
        double m = 0.5 * (l + r);
        for (int it = 0; it < 200; ++it) {
            m = 0.5 * (l + r);
            if (m <= l || m >= r) break;
            const double fm = f(n, m);
            if (std::abs(fm) <= opts_.root_tol) break;
            if ((fm < 0.0) == (fl < 0.0)) {
                l = m;
                fl = fm;
            } else {
                r = m;
            }
        }
        if (!in_side(m)) return;
        auto rec = make(n, m, n == IntersectionRecord::kEssential ? IntersectionKind::EssentialEndpoint
                                                                    : IntersectionKind::Transversal,
                        lo0, hi0);
        if (rec.residual > opts_.root_tol) rec.note += (rec.note.empty() ? "" : "; ") + std::string("bracket collapsed above root tolerance");
        out.records.push_back(std::move(rec));
    }

    void interval(int n, double l, double r, int depth, IntersectionSet& out, bool refined = false) {
        const double fl = f(n, l);
        const double fr = f(n, r);
        if (fl == 0.0) {
            if (in_side(l)) out.records.push_back(make(n, l, n == IntersectionRecord::kEssential ? IntersectionKind::EssentialEndpoint : IntersectionKind::Transversal, l, l));
            return;
        }
        if (fr == 0.0) return;  // reported by the interval to the right (or the range end)
        if ((fl < 0.0) != (fr < 0.0)) {
            bisect(n, l, r, fl, out);
            return;
        }
        if (certified(n, l, r, fl, fr)) return;
        if (depth < opts_.split_depth && evaluations_ < opts_.max_evaluations) {
            const double m = 0.5 * (l + r);
            interval(n, l, m, depth + 1, out, refined);
            interval(n, m, r, depth + 1, out, refined);
            return;
        }
        // Local minimum of s * f, s the common sign.
        const double s = fl < 0.0 ? -1.0 : 1.0;
        std::uintmax_t iters = 80;
        const auto [mmin, vmin] = boost::math::tools::brent_find_minima(
            [&](double x) { return s * f(n, x); }, l, r, 40, iters);
        if (vmin < 0.0) {
            interval(n, l, mmin, opts_.split_depth, out, refined);
            interval(n, mmin, r, opts_.split_depth, out, refined);
            return;
        }
        if (vmin < opts_.tangency_tol) {
            if (in_side(mmin)) {
                auto rec = make(n, mmin, n == IntersectionRecord::kEssential ? IntersectionKind::EssentialEndpoint
                                                                              : IntersectionKind::Tangency,
                                l, r);
                if (n == IntersectionRecord::kEssential) rec.note += "; tangency";
                out.records.push_back(std::move(rec));
            }
            return;
        }
        // Clear the two halves around the minimum with the remaining budget;
        // the first time round, allow further halving towards the minimum.
        if (evaluations_ < opts_.max_evaluations && mmin > l && mmin < r) {
            const int next = refined ? depth + 1 : opts_.split_depth - kRefineLevels;
            interval(n, l, mmin, next, out, true);
            interval(n, mmin, r, next, out, true);
            return;
        }
        ++uncertified_;
    }

    // Two neighbouring zeros enclosing an extremum with |f| below the
    // tangency threshold are one double zero split by rounding.
    void merge_tangencies(int n, IntersectionSet& out) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.records.size(); ++i)
            if (out.records[i].curve == n && !out.records[i].out_of_range()) idx.push_back(i);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return out.records[a].mu_star < out.records[b].mu_star; });
        std::vector<std::size_t> drop;
        for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
            auto& r1 = out.records[idx[j]];
            const auto& r2 = out.records[idx[j + 1]];
            if (r1.kind == IntersectionKind::Tangency || r2.kind == IntersectionKind::Tangency) continue;
            const double l = r1.mu_star;
            const double r = r2.mu_star;
            const double mid = 0.5 * (l + r);
            const double fm = f(n, mid);
            if (!(std::abs(fm) < opts_.tangency_tol)) continue;
            const double s = fm < 0.0 ? 1.0 : -1.0;
            std::uintmax_t iters = 80;
            const auto [mext, vext] = boost::math::tools::brent_find_minima(
                [&](double x) { return s * f(n, x); }, l, r, 40, iters);
            if (std::abs(vext) >= opts_.tangency_tol) continue;
            auto merged = make(n, mext, n == IntersectionRecord::kEssential ? IntersectionKind::EssentialEndpoint
                                                                             : IntersectionKind::Tangency,
                               std::min(r1.bracket_lo, r2.bracket_lo), std::max(r1.bracket_hi, r2.bracket_hi));
            if (n == IntersectionRecord::kEssential) merged.note += "; tangency";
            r1 = std::move(merged);
            drop.push_back(idx[j + 1]);
            ++j;
        }
        std::sort(drop.rbegin(), drop.rend());
        for (auto d : drop) out.records.erase(out.records.begin() + static_cast<std::ptrdiff_t>(d));
    }

    // Beyond a range end the quadratic q(t) = f_end + t (2 s mu_end / alpha^2
    // - ||a||) + t^2 / alpha^2 bounds f from below (s the outward direction).
    void range_end(int n, double m_end, int s, IntersectionSet& out) {
        const double fe = f(n, m_end);
        const double a2 = alpha_ * alpha_;
        const double lin = 2.0 * s * m_end / a2 - table_.lipschitz_bound;
        const double bmin = lin >= 0.0 ? fe : fe - lin * lin * a2 / 4.0;
        if (fe > 0.0 && bmin > 0.0) return;
        // Beyond the larger root of q the function is certainly positive.
        const double disc = lin * lin - 4.0 * fe / a2;
        const double t = 0.5 * a2 * (-lin + std::sqrt(std::max(0.0, disc)));
        auto rec = make(n, m_end, IntersectionKind::OutOfRange, std::min(m_end, m_end + s * t), std::max(m_end, m_end + s * t));
        rec.mu_star = m_end;
        rec.lambda = m_end / alpha_;
        rec.residual = fe;
        rec.note = fe <= 0.0 ? "curve below the parabola at the range end; zero beyond the sampled range"
                             : "zero beyond the sampled range not excluded";
        out.records.push_back(std::move(rec));
    }

    void scan(int n, IntersectionSet& out) {
        const auto pts = sample_points();
        if (pts.size() < 2) throw RangeError("eigencurve table has fewer than 2 samples on the requested side");
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) interval(n, pts[i], pts[i + 1], 0, out);
        const double last = pts.back();
        if (f(n, last) == 0.0 && in_side(last)) {
            out.records.push_back(make(n, last, n == IntersectionRecord::kEssential ? IntersectionKind::EssentialEndpoint : IntersectionKind::Transversal, last, last));
        }
        merge_tangencies(n, out);
        if (opts_.side >= 0) range_end(n, pts.back(), +1, out);
        if (opts_.side <= 0) range_end(n, pts.front(), -1, out);
        out.uncertified += uncertified_;
        uncertified_ = 0;
    }

    // The essential row: closed form when linear, otherwise bracketing.
    void essential_records(IntersectionSet& out) {
        const auto& mu = table_.mu;
        const auto& v = table_.essential_lower;
        const auto nn = static_cast<double>(mu.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, scale = 1.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            sx += mu[i];
            sy += v[i];
            sxx += mu[i] * mu[i];
            sxy += mu[i] * v[i];
            scale = std::max(scale, std::abs(v[i]));
        }
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        const double icpt = (sy - slope * sx) / nn;
        double dev = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) dev = std::max(dev, std::abs(v[i] - icpt - slope * mu[i]));
        if (dev > opts_.linear_tol * scale) {
            scan(IntersectionRecord::kEssential, out);
            return;
        }
        // mu^2 / alpha^2 + slope mu + icpt = 0, i.e. the endpoints
        // lambda = (-alpha slope +- sqrt(alpha^2 slope^2 - 4 icpt)) / 2.
        const double delta = alpha_ * alpha_ * slope * slope - 4.0 * icpt;
        if (delta < 0.0) return;
        const double sq = std::sqrt(delta);
        std::vector<double> lambdas{0.5 * (-alpha_ * slope - sq)};
        if (sq > 0.0) lambdas.push_back(0.5 * (-alpha_ * slope + sq));
        for (double lam : lambdas) {
            const double m = lam * alpha_;
            if (!in_side(m)) continue;
            IntersectionRecord r;
            r.curve = IntersectionRecord::kEssential;
            r.alpha = alpha_;
            r.mu_star = m;
            r.lambda = lam;
            r.kind = IntersectionKind::EssentialEndpoint;
            r.bracket_lo = m;
            r.bracket_hi = m;
            r.residual = std::abs(icpt + slope * m + parabola(m));
            r.classification = SpectralClass::Essential;
            r.note = "essential (sufficient criterion); linear essential row a_inf = " + std::to_string(slope) +
                     ", gamma_inf(0) = " + std::to_string(icpt);
            if (sq == 0.0) r.note += "; degenerate interval";
            if (m < table_.mu_min() || m > table_.mu_max()) r.note += "; outside the sampled range";
            out.records.push_back(std::move(r));
        }
    }

    static constexpr int kRefineLevels = 24;

    const EigencurveTable& table_;
    double alpha_;
    IntersectOptions opts_;
    std::map<double, std::vector<double>> gamma_cache_;
    std::map<double, double> ess_cache_;
    std::map<double, std::vector<double>> slope_cache_;
    int evaluations_ = 0;
    int uncertified_ = 0;
};

}  // namespace detail

inline IntersectionSet intersect(const EigencurveTable& table, double alpha, const IntersectOptions& opts = {}) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive, got " + std::to_string(alpha));
    if (!table.source) throw DomainError("eigencurve table has no sampler attached");
    return detail::IntersectionSearch(table, alpha, opts).run();
}

inline std::vector<IntersectionRecord> intersect_all(const EigencurveTable& table, double alpha,
                                                     const IntersectOptions& opts = {}) {
    return intersect(table, alpha, opts).records;
}

}  // namespace dampwave
