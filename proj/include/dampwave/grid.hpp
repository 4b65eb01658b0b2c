#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dampwave/error.hpp"

namespace dampwave {

// One axis of a domain descriptor. A truncated axis stands in for an
// unbounded direction and always spans [-radius, radius].
struct AxisSpec {
    double lower = 0.0;
    double upper = 1.0;
    int points = 0;
    bool truncated = false;

    static AxisSpec interval(double lower, double upper, int points) {
        return {lower, upper, points, false};
    }
    static AxisSpec truncated_line(double radius, int points) {
        return {-radius, radius, points, true};
    }
};

struct DomainDescriptor {
    std::vector<AxisSpec> axes;
};

// Uniform Dirichlet grid. Boundary nodes are excluded, so an axis with
// `points` unknowns has spacing (upper - lower) / (points + 1).
struct Axis {
    double lower = 0.0;
    double upper = 0.0;
    int points = 0;
    double h = 0.0;
    bool truncated = false;

    double coordinate(int i) const { return lower + (i + 1) * h; }
    double length() const { return upper - lower; }
    // Only meaningful for truncated axes.
    double radius() const { return 0.5 * (upper - lower); }
};

class Grid {
public:
    static constexpr int kMinPoints = 3;

    static Grid build(const DomainDescriptor& spec) {
        if (spec.axes.empty() || spec.axes.size() > 2) {
            throw ConfigError("domain dimension must be 1 or 2, got " + std::to_string(spec.axes.size()));
        }
        Grid g;
        for (std::size_t d = 0; d < spec.axes.size(); ++d) {
            const auto& s = spec.axes[d];
            const std::string tag = "axis " + std::to_string(d);
            if (!std::isfinite(s.lower) || !std::isfinite(s.upper) || !(s.upper > s.lower)) {
                throw ConfigError(tag + ": extent must be a finite interval with upper > lower");
            }
            if (s.points < kMinPoints) {
                throw ConfigError(tag + ": need at least " + std::to_string(kMinPoints) + " interior points, got " +
                                  std::to_string(s.points));
            }
            if (s.truncated && std::abs(s.lower + s.upper) > 1e-12 * (s.upper - s.lower)) {
                throw ConfigError(tag + ": truncated axis must be symmetric [-R, R]");
            }
            Axis a;
            a.lower = s.lower;
            a.upper = s.upper;
            a.points = s.points;
            a.h = (s.upper - s.lower) / (s.points + 1);
            a.truncated = s.truncated;
            g.axes_.push_back(a);
        }
        return g;
    }

    int dimension() const { return static_cast<int>(axes_.size()); }
    const Axis& axis(int d) const { return axes_.at(static_cast<std::size_t>(d)); }
    const std::vector<Axis>& axes() const { return axes_; }

    int size() const {
        int n = 1;
        for (const auto& a : axes_) n *= a.points;
        return n;
    }

    // Lexicographic index with axis 0 fastest.
    int index(int i, int j = 0) const { return i + (dimension() == 2 ? j * axes_[0].points : 0); }

    std::array<int, 2> multi_index(int idx) const {
        if (dimension() == 1) return {idx, 0};
        return {idx % axes_[0].points, idx / axes_[0].points};
    }

    std::array<double, 2> point(int idx) const {
        const auto [i, j] = multi_index(idx);
        return {axes_[0].coordinate(i), dimension() == 2 ? axes_[1].coordinate(j) : 0.0};
    }

    double cell_volume() const {
        double v = 1.0;
        for (const auto& a : axes_) v *= a.h;
        return v;
    }

    bool has_truncated_axis() const {
        for (const auto& a : axes_)
            if (a.truncated) return true;
        return false;
    }

    // Smallest truncation radius over truncated axes (0 if none).
    double min_truncation_radius() const {
        double r = 0.0;
        for (const auto& a : axes_)
            if (a.truncated) r = (r == 0.0) ? a.radius() : std::min(r, a.radius());
        return r;
    }

    // Sup-norm distance from the origin measured along truncated axes only.
    double truncated_distance(int idx) const {
        const auto p = point(idx);
        double d = 0.0;
        for (int k = 0; k < dimension(); ++k)
            if (axes_[static_cast<std::size_t>(k)].truncated) d = std::max(d, std::abs(p[static_cast<std::size_t>(k)]));
        return d;
    }

    // True if the node lies in the outermost `fraction` of nodes along any
    // truncated axis (fraction/2 at each end).
    bool in_boundary_zone(int idx, double fraction) const {
        const auto mi = multi_index(idx);
        for (int k = 0; k < dimension(); ++k) {
            const auto& a = axes_[static_cast<std::size_t>(k)];
            if (!a.truncated) continue;
            const int width = std::max(1, static_cast<int>(std::ceil(0.5 * fraction * a.points)));
            const int i = mi[static_cast<std::size_t>(k)];
            if (i < width || i >= a.points - width) return true;
        }
        return false;
    }

private:
    std::vector<Axis> axes_;
};

inline Grid build_grid(const DomainDescriptor& spec) { return Grid::build(spec); }

}  // namespace dampwave
