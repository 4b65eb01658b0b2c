#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dampwave/error.hpp"
#include "dampwave/expression.hpp"
#include "dampwave/grid.hpp"

namespace dampwave {

// Declared asymptotic behaviour of the coefficients. Declared limits are
// checked against the boundary-zone samples; undeclared ones are estimated
// there when the samples are flat to within `asymptotic_tolerance`.
struct AsymptoticDeclaration {
    std::optional<double> a_inf;
    std::optional<double> b_inf;
    std::optional<double> gamma_inf_0;
    double boundary_fraction = 0.1;
    double asymptotic_tolerance = 1e-2;
};

struct CoefficientSet {
    std::vector<double> a;
    std::vector<double> b;
    double a_min = 0.0;
    double a_max = 0.0;
    double b_min = 0.0;
    std::optional<double> a_inf;
    std::optional<double> b_inf;
    std::optional<double> gamma_inf_0;
    bool a_inf_estimated = false;
    bool b_inf_estimated = false;

    // ||a||_inf, the Lipschitz constant of every eigencurve.
    double a_sup_norm() const { return std::max(std::abs(a_min), std::abs(a_max)); }
    int size() const { return static_cast<int>(a.size()); }
};

namespace detail {

inline std::optional<double> check_asymptote(const Grid& grid, const std::vector<double>& values,
                                             std::optional<double> declared, const AsymptoticDeclaration& decl,
                                             const char* name, bool& estimated) {
    estimated = false;
    if (!grid.has_truncated_axis()) {
        if (declared) {
            throw ValidationError(std::string("asymptotic value ") + name +
                                  " declared on a domain without truncated axes");
        }
        return std::nullopt;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    int count = 0;
    double worst = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        if (!grid.in_boundary_zone(i, decl.boundary_fraction)) continue;
        const double v = values[static_cast<std::size_t>(i)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++count;
        if (declared) worst = std::max(worst, std::abs(v - *declared));
    }
    if (declared) {
        if (!(worst < decl.asymptotic_tolerance)) {
            std::ostringstream msg;
            msg << "declared " << name << " = " << *declared << " is inconsistent with boundary-zone samples"
                << " (max deviation " << worst << ", tolerance " << decl.asymptotic_tolerance << ")";
            throw ValidationError(msg.str());
        }
        return declared;
    }
    if (count > 0 && hi - lo < decl.asymptotic_tolerance) {
        estimated = true;
        return sum / count;
    }
    return std::nullopt;
}

}  // namespace detail

inline CoefficientSet sample_coefficients(const Grid& grid, const Expression& a_expr, const Expression& b_expr,
                                          const AsymptoticDeclaration& decl = {}) {
    if (grid.dimension() == 1 && (a_expr.uses_y() || b_expr.uses_y())) {
        throw CoefficientError("coefficient expression uses y on a one-dimensional domain");
    }
    CoefficientSet c;
    const int n = grid.size();
    c.a.resize(static_cast<std::size_t>(n));
    c.b.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto p = grid.point(i);
        const double av = a_expr(p[0], p[1]);
        const double bv = b_expr(p[0], p[1]);
        if (!std::isfinite(av) || !std::isfinite(bv)) {
            std::ostringstream msg;
            msg << "non-finite coefficient sample at x = " << p[0];
            if (grid.dimension() == 2) msg << ", y = " << p[1];
            msg << " (a = " << av << ", b = " << bv << ")";
            throw CoefficientError(msg.str());
        }
        c.a[static_cast<std::size_t>(i)] = av;
        c.b[static_cast<std::size_t>(i)] = bv;
    }
    const auto [amin, amax] = std::minmax_element(c.a.begin(), c.a.end());
    c.a_min = *amin;
    c.a_max = *amax;
    c.b_min = *std::min_element(c.b.begin(), c.b.end());
    c.a_inf = detail::check_asymptote(grid, c.a, decl.a_inf, decl, "a_inf", c.a_inf_estimated);
    c.b_inf = detail::check_asymptote(grid, c.b, decl.b_inf, decl, "b_inf", c.b_inf_estimated);
    c.gamma_inf_0 = decl.gamma_inf_0;
    return c;
}

inline CoefficientSet sample_coefficients(const Grid& grid, const std::string& a_src, const std::string& b_src,
                                          const AsymptoticDeclaration& decl = {}) {
    return sample_coefficients(grid, Expression::parse(a_src), Expression::parse(b_src), decl);
}

}  // namespace dampwave
