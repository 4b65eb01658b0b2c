// Acceptance run: one [PASS]/[FAIL] line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dampwave/dampwave.hpp"

using namespace dampwave;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

ScenarioConfig interval_config(const std::string& a, const std::string& b, int points) {
    ScenarioConfig c;
    AxisConfig ax;
    ax.lower = {0.0, ""};
    ax.upper = {pi, "pi"};
    ax.points = points;
    c.axes = {ax};
    c.coefficients.a = a;
    c.coefficients.b = b;
    return c;
}

ScenarioConfig line_config(const std::string& a, const std::string& b, double radius, int points) {
    ScenarioConfig c;
    AxisConfig ax;
    ax.truncated = true;
    ax.radius = radius;
    ax.lower = {-radius, ""};
    ax.upper = {radius, ""};
    ax.points = points;
    c.axes = {ax};
    c.coefficients.a = a;
    c.coefficients.b = b;
    return c;
}

// Piecewise constant profile on (0, pi) as a nested if expression.
std::string piecewise(const std::vector<double>& cuts, const std::vector<double>& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < cuts.size(); ++i) os << "if(x < " << cuts[i] << ", " << values[i] << ", ";
    os << values.back();
    for (std::size_t i = 0; i < cuts.size(); ++i) os << ")";
    return os.str();
}

struct RandomScenario {
    std::string a, b;
};

RandomScenario random_scenario(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pieces(2, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto profile = [&](double lo, double hi, bool need_negative) {
        const int m = pieces(rng);
        std::vector<double> cuts, values;
        for (int i = 0; i + 1 < m; ++i) cuts.push_back(pi * u(rng));
        std::sort(cuts.begin(), cuts.end());
        for (int i = 0; i < m; ++i) values.push_back(lo + (hi - lo) * u(rng));
        if (need_negative) {
            std::uniform_int_distribution<int> pick(0, m - 1);
            values[static_cast<std::size_t>(pick(rng))] = -0.2 - 1.8 * u(rng);
        }
        return piecewise(cuts, values);
    };
    return {profile(-2.0, 2.0, true), profile(0.0, 2.0, false)};
}

// 1. Real eigenvalues of the block matrix against the lowest k curves, both directions.
Outcome ac1(std::vector<EigencurveTable>& tables) {
    std::mt19937_64 rng(2024);
    int mismatches = 0, real_checked = 0, records_checked = 0, beyond = 0, tangencies = 0;
    double worst_gamma = 0.0, worst_lambda = 0.0;
    for (int sc = 0; sc < 20; ++sc) {
        const auto r = random_scenario(rng);
        const auto s = Scenario::build(interval_config(r.a, r.b, 120));
        for (double alpha : {0.5, 2.0, 8.0}) {
            const int k = auto_curve_count(s, alpha);
            auto table = scenario_table(s, alpha, k);
            const auto counts = count_real_points(table, alpha);
            auto rep = spectrum_full(assemble_block(s.grid, s.coeffs, alpha));
            cover_real_eigenvalues(table, rep);
            const auto v = cross_validate(rep, table, alpha, counts.records, 1e-6, 1e-6);
            mismatches += static_cast<int>(v.mismatches.size());
            beyond += v.beyond_k;
            // Absolute distances against the lowest k eigenvalues only.
            for (const auto& p : rep.real) {
                ++real_checked;
                const auto sl = table.source->slice(alpha * p.lambda);
                double d = std::numeric_limits<double>::infinity();
                for (double g : sl.eigenvalues) d = std::min(d, std::abs(g + p.lambda * p.lambda));
                worst_gamma = std::max(worst_gamma, d);
                if (!(d < 1e-6)) ++mismatches;
            }
            for (const auto& rec : counts.records) {
                if (rec.out_of_range() || rec.essential() || rec.classification != SpectralClass::Discrete) continue;
                ++records_checked;
                double d = std::numeric_limits<double>::infinity();
                for (const auto& p : rep.real) d = std::min(d, std::abs(p.lambda - rec.lambda));
                if (rec.kind == IntersectionKind::Tangency)
                    for (const auto& e : rep.eigenvalues) d = std::min(d, std::abs(e.lambda - rec.lambda));
                if (rec.kind == IntersectionKind::Tangency) ++tangencies;
                else worst_lambda = std::max(worst_lambda, d);
                if (!(d < 1e-6) && rec.kind != IntersectionKind::Tangency) ++mismatches;
            }
            tables.push_back(std::move(table));
        }
    }
    std::ostringstream os;
    os << "20 scenarios x 3 alpha: " << real_checked << " real eigenvalues, " << records_checked
       << " discrete intersections (" << tangencies << " tangencies), mismatches " << mismatches << ", beyond k "
       << beyond << ", max |gamma + lambda^2| " << worst_gamma << ", max |dlambda| " << worst_lambda;
    return {mismatches == 0 && beyond == 0 && real_checked > 0 && records_checked > 0, os.str()};
}

// 2. Lipschitz law on every sampled table.
Outcome ac2(const std::vector<EigencurveTable>& tables) {
    int pairs = 0, violations = 0;
    double worst = 0.0;
    for (const auto& t : tables) {
        const auto r = check_lipschitz(t, 2e-8);
        pairs += r.pairs_checked;
        violations += static_cast<int>(r.violations.size());
        worst = std::max(worst, r.worst_ratio);
    }
    std::ostringstream os;
    os << tables.size() << " tables, " << pairs << " adjacent pairs, violations " << violations << ", worst ratio " << worst;
    return {violations == 0 && pairs > 0, os.str()};
}

// 3. gamma_1(mu) / mu tends to a_min as mu -> +inf and to a_max as mu -> -inf.
Outcome ac3() {
    const auto s = Scenario::build(interval_config("sign(x - pi/2)", "0", 2000));
    CurveSamplerOptions o;
    o.k = 1;
    const CurveSampler cs(s.grid, s.coeffs, o);
    const double plus = cs.curve_value(0, 1e4) / 1e4;
    const double minus = cs.curve_value(0, -1e4) / -1e4;
    const double e1 = std::abs(plus - s.coeffs.a_min), e2 = std::abs(minus - s.coeffs.a_max);
    std::ostringstream os;
    os << "gamma_1(1e4)/1e4 = " << plus << " (a_min " << s.coeffs.a_min << "), gamma_1(-1e4)/-1e4 = " << minus
       << " (a_max " << s.coeffs.a_max << ")";
    return {e1 <= 0.05 && e2 <= 0.05, os.str()};
}

// 4. Thresholds 2 sqrt(gamma_n(0)) for a = -1 on (0, pi).
Outcome ac4() {
    const auto s = Scenario::build(interval_config("-1", "0", 199));
    const auto table = sample_eigencurves(make_sampler(s, 3), {-100.0, 100.0}, 41);
    const int z = *table.index_of(0.0);
    bool ok = true;
    std::ostringstream os;
    for (int n = 0; n < 3; ++n) {
        const auto r = thresholds(table, n, 1);
        const double oracle = 2.0 * std::sqrt(table.gamma(n, z));
        const double rel = std::abs(r.alpha_threshold - oracle) / oracle;
        ok = ok && r.found() && rel <= 0.01 && std::abs(r.alpha_threshold - 2.0 * (n + 1)) <= 0.01 * 2.0 * (n + 1);
        os << "alpha_" << n + 1 << " = " << r.alpha_threshold << " (oracle " << oracle << ", rel " << rel << ") ";
    }
    return {ok, os.str()};
}

// 5. Real eigenvalues of the truncated problem accumulate on the essential interval [0, 2].
Outcome ac5() {
    int prev_inside = -1;
    bool ok = true;
    std::ostringstream os;
    for (const double radius : {20.0, 40.0}) {
        auto c = line_config("-1 + 0.5*exp(-x^2)", "0", radius, static_cast<int>(std::lround(20.0 * radius)) - 1);
        c.coefficients.a_inf = -1.0;
        c.coefficients.b_inf = 0.0;
        const auto s = Scenario::build(c);
        const auto ess = essential_interval(*s.gamma_inf_0(), *s.coeffs.a_inf, 2.0);
        const auto rep = spectrum_full(assemble_block(s.grid, s.coeffs, 2.0));
        int inside = 0;
        for (const auto& p : rep.real)
            if (p.lambda >= ess->lower - 0.1 && p.lambda <= ess->upper + 0.1) ++inside;
        const double frac = rep.real.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(rep.real.size());
        ok = ok && frac >= 0.8 && inside > prev_inside;
        os << "R = " << radius << ": " << inside << "/" << rep.real.size() << " in [" << ess->lower << ", " << ess->upper
           << "] +- 0.1; ";
        prev_inside = inside;
    }
    return {ok, os.str()};
}

// 6. Resolvent and a priori bounds on random (eta, Phi).
Outcome ac6() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    int resolvent_ok = 0, apriori_ok = 0;
    double worst_r = 0.0, worst_a = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = random_scenario(rng);
        const double bshift = -1.0 * u(rng);
        const auto s = Scenario::build(interval_config(r.a, r.b + " + " + std::to_string(bshift), 100));
        const double alpha = 10.0 * u(rng);
        const auto op = assemble_block(s.grid, s.coeffs, alpha);
        const auto c = semigroup_constants(op);
        const double eta = c.eta_alpha * std::max(1e-6, u(rng) * (1.0 - 1e-9));
        Vector p1(op.n()), p2(op.n());
        for (Eigen::Index i = 0; i < op.n(); ++i) {
            p1[i] = nd(rng);
            p2[i] = nd(rng);
        }
        const auto res = resolvent_solve(op, eta, StateVector::make(op.energy(), p1, p2), 1e-10);
        const auto apr = check_apriori_bound(op, eta, p2, 1e-10);
        resolvent_ok += res.bound_holds;
        apriori_ok += apr.holds;
        worst_r = std::max(worst_r, res.ratio / res.bound);
        worst_a = std::max(worst_a, apr.ratio);
    }
    std::ostringstream os;
    os << "resolvent bound " << resolvent_ok << "/100 (max ratio/bound " << worst_r << "), a priori bound " << apriori_ok
       << "/100 (max ratio " << worst_a << ")";
    return {resolvent_ok == 100 && apriori_ok == 100, os.str()};
}

// 7. Growth rate of the trapezoidal evolution against the top real eigenvalue.
Outcome ac7() {
    const auto s = Scenario::build(interval_config("-1", "0", 199));
    const auto op = assemble_block(s.grid, s.coeffs, 3.0);
    const auto rep = spectrum_full(op);
    const double top = *rep.largest_real_part();
    const double g1 = lowest_eigenvalues(op.s0(), 1).eigenvalues[0];
    const double oracle = 0.5 * (3.0 + std::sqrt(9.0 - 4.0 * g1));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[5];
    for (double& ci : c) ci = u(rng);
    Vector p1(op.n()), p2(op.n());
    for (int i = 0; i < s.grid.size(); ++i) {
        const double x = s.grid.point(i)[0];
        p1[i] = c[0] * std::sin(x) + c[1] * std::sin(2 * x) + c[2] * std::sin(3 * x);
        p2[i] = c[3] * std::sin(x) + c[4] * std::sin(4 * x);
    }
    const auto psi0 = StateVector::make(op.energy(), p1, p2);
    const double dt = 1e-2;
    const auto g = growth_refinement(op, psi0, 8.0, dt, 0.5);
    const auto tr = evolve(op, psi0, 8.0, dt);
    const auto bound = check_semigroup_bound(tr, semigroup_constants(op));
    const double rel = std::abs(g.extrapolated - top) / top;
    std::ostringstream os;
    os << "top eigenvalue " << top << " (oracle " << oracle << "), growth " << g.rate << " / " << g.rate_half
       << " -> " << g.extrapolated << " (rel " << rel << "), semigroup certified violations " << bound.certified_violations;
    return {rel <= 0.02 && std::abs(top - oracle) <= 1e-6 * oracle && bound.ok(), os.str()};
}

// 8. A positive real eigenvalue persists for every alpha when S0 has one negative eigenvalue.
Outcome ac8() {
    auto c = line_config("1 - 1.5*exp(-x^2)", "-2*sech(x)^2", 20.0, 399);
    c.coefficients.a_inf = 1.0;
    c.coefficients.b_inf = 0.0;
    const auto s = Scenario::build(c);
    const auto g = lowest_eigenvalues(assemble_schrodinger(s.grid, s.coeffs, 0.0), 2).eigenvalues;
    bool ok = g[0] < 0.0 && g[1] >= 0.0;
    std::ostringstream os;
    os << "gamma(0) = {" << g[0] << ", " << g[1] << "}; ";
    for (double alpha : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const auto rep = spectrum_full(assemble_block(s.grid, s.coeffs, alpha));
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : rep.real)
            if (p.qep_residual < 1e-8) best = std::max(best, p.lambda);
        ok = ok && best > 0.0;
        os << "alpha " << alpha << ": lambda_max " << best << "; ";
    }
    return {ok, os.str()};
}

// 9. Finite alpha_0 for the sign-changing line, stable as R doubles.
Outcome ac9() {
    std::vector<double> a0;
    std::ostringstream os;
    bool ok = true;
    for (const double radius : {20.0, 40.0}) {
        auto c = line_config("if(abs(x) < 1, -1, 1/x^2)", "0", radius, static_cast<int>(std::lround(20.0 * radius)) - 1);
        c.coefficients.a_inf = 0.0;
        c.coefficients.b_inf = 0.0;
        const auto r = sweep_alpha(Scenario::build(c), 0.1, 10.0, 1e-2);
        ok = ok && r.found && std::isfinite(r.alpha0) && r.width() <= 1e-2;
        a0.push_back(r.alpha0);
        os << "R = " << radius << ": alpha0 = " << r.alpha0 << " in [" << r.bracket_lo << ", " << r.bracket_hi << "]; ";
    }
    const double rel = std::abs(a0[1] - a0[0]) / a0[0];
    os << "relative change " << rel;
    return {ok && rel <= 0.05, os.str()};
}

}  // namespace

int main() {
    std::vector<EigencurveTable> tables;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 block/eigencurve equivalence", [&] { return ac1(tables); }},
        {"AC2 eigencurve Lipschitz law", [&] { return ac2(tables); }},
        {"AC3 asymptotic slopes", ac3},
        {"AC4 closed-form thresholds", ac4},
        {"AC5 essential interval", ac5},
        {"AC6 resolvent bounds", ac6},
        {"AC7 growth-rate agreement", ac7},
        {"AC8 persistence of instability", ac8},
        {"AC9 alpha_0 sweep", ac9},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed;
}
