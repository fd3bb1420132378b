#pragma once

// Frozen-L phase-space geometry: stable manifolds of saddles, basins of
// attraction on a grid, and basin instability of a living equilibrium.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "daisyworld/equilibria.hpp"
#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/model.hpp"
#include "daisyworld/numerics.hpp"
#include "daisyworld/parallel.hpp"
#include "daisyworld/solver.hpp"

namespace daisyworld::geometry {

struct Box {
    double lo = -0.05;
    double hi = 1.05;

    [[nodiscard]] bool contains(State s) const {
        return s.alpha_w >= lo && s.alpha_w <= hi && s.alpha_b >= lo && s.alpha_b <= hi;
    }
};

struct ManifoldOptions {
    double seed_offset = 1e-6;
    Box clip{};
    double arclength_budget = 10.0;
    double max_time = 5e3;   ///< backward-time cap per half (a half may end on a repeller)
    double max_step = 0.05;  ///< bounds polyline spacing
};

/// Both halves of a saddle's 1-D stable manifold joined through the saddle,
/// ordered by arclength.
struct ManifoldCurve {
    double L = 0.0;
    Equilibrium saddle;
    std::vector<State> points;
    std::size_t saddle_index = 0;
};

namespace detail {

/// Unit eigenvector of J for real eigenvalue `lambda`.
inline Eigen::Vector2d eigenvector(const Eigen::Matrix2d& J, double lambda) {
    const Eigen::Vector2d a(J(0, 1), lambda - J(0, 0));
    const Eigen::Vector2d b(lambda - J(1, 1), J(1, 0));
    const Eigen::Vector2d v = a.norm() >= b.norm() ? a : b;
    if (v.norm() == 0.0) return Eigen::Vector2d(1.0, 0.0);  // J = lambda I
    return v.normalized();
}

/// Point where segment a->b leaves the box, b being outside.
inline State exit_point(State a, State b, const Box& box) {
    double t_exit = 1.0;
    auto clip = [&](double from, double to) {
        if (to < box.lo) t_exit = std::min(t_exit, (box.lo - from) / (to - from));
        if (to > box.hi) t_exit = std::min(t_exit, (box.hi - from) / (to - from));
    };
    clip(a.alpha_w, b.alpha_w);
    clip(a.alpha_b, b.alpha_b);
    t_exit = std::clamp(t_exit, 0.0, 1.0);
    return a + t_exit * (b - a);
}

inline std::vector<State> backward_half(State seed, double L, const Params& p, const ManifoldOptions& opts) {
    std::vector<State> pts{seed};
    double arclength = 0.0;
    solver::IntegratorOptions iopts;
    iopts.max_step = opts.max_step;
    iopts.initial_step = 1e-3;
    try {
        solver::dopri5([&](double, State x) { return -1.0 * rhs_unchecked(x, L, p); }, 0.0, seed, opts.max_time,
                       iopts, [](State) { return true; },
                       [&](double, State x) {
                           if (!opts.clip.contains(x)) {
                               pts.push_back(exit_point(pts.back(), x, opts.clip));
                               return false;
                           }
                           arclength += distance(pts.back(), x);
                           pts.push_back(x);
                           // settled on a repeller: nothing left to trace
                           return arclength < opts.arclength_budget && norm_inf(rhs_unchecked(x, L, p)) > 1e-12;
                       });
    } catch (const DomainError&) {
        // the reversed flow left the region where local temperatures exist;
        // the polyline up to that point stands
    }
    return pts;
}

}  // namespace detail

/// Integrates the time-reversed field from saddle +- eps * v_s until each
/// half leaves the clip box, spends the arclength budget or stalls on a
/// repeller.
[[nodiscard]] inline ManifoldCurve stable_manifold(const Equilibrium& saddle, const Params& p,
                                                   const ManifoldOptions& opts = {}) {
    if (saddle.stability != Stability::saddle) {
        throw DomainError("stable_manifold: " + std::string(to_string(saddle.label)) + " at L = " +
                          std::to_string(saddle.L) + " is not a saddle");
    }
    const Eigen::Matrix2d J = equilibria::jacobian(saddle.state, saddle.L, p);
    const double lambda_s = saddle.eigenvalues[0].real();  // ordered by real part
    const Eigen::Vector2d v = detail::eigenvector(J, lambda_s);
    const State offset{opts.seed_offset * v(0), opts.seed_offset * v(1)};

    const auto minus = detail::backward_half(saddle.state - offset, saddle.L, p, opts);
    const auto plus = detail::backward_half(saddle.state + offset, saddle.L, p, opts);

    ManifoldCurve curve;
    curve.L = saddle.L;
    curve.saddle = saddle;
    curve.points.assign(minus.rbegin(), minus.rend());
    curve.saddle_index = curve.points.size();
    curve.points.push_back(saddle.state);
    curve.points.insert(curve.points.end(), plus.begin(), plus.end());
    return curve;
}

/// Distance from x to the polyline.
[[nodiscard]] inline double distance_to_curve(const ManifoldCurve& c, State x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const State a = c.points[i], b = c.points[i + 1];
        const State ab = b - a;
        const double len2 = ab.alpha_w * ab.alpha_w + ab.alpha_b * ab.alpha_b;
        double t = 0.0;
        if (len2 > 0.0) {
            t = ((x.alpha_w - a.alpha_w) * ab.alpha_w + (x.alpha_b - a.alpha_b) * ab.alpha_b) / len2;
            t = std::clamp(t, 0.0, 1.0);
        }
        best = std::min(best, distance(x, a + t * ab));
    }
    if (c.points.size() == 1) best = distance(x, c.points.front());
    return best;
}

/// Number of times the segment from the origin (the dead planet) to x
/// crosses the curve.
[[nodiscard]] inline int crossings_from_origin(const ManifoldCurve& c, State x) {
    auto cross = [](State o, State a, State b) {
        return (a.alpha_w - o.alpha_w) * (b.alpha_b - o.alpha_b) - (a.alpha_b - o.alpha_b) * (b.alpha_w - o.alpha_w);
    };
    const State o{0.0, 0.0};
    int count = 0;
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const State a = c.points[i], b = c.points[i + 1];
        const double d1 = cross(o, x, a), d2 = cross(o, x, b);
        const double d3 = cross(a, b, o), d4 = cross(a, b, x);
        // half-open rule on the first pair so shared vertices count once
        if (((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))) ++count;
    }
    return count;
}

/// Signed distance to the curve, positive on the side containing the origin.
[[nodiscard]] inline double signed_side(const ManifoldCurve& c, State x) {
    const double d = distance_to_curve(c, x);
    return crossings_from_origin(c, x) % 2 == 0 ? d : -d;
}

/// Cell classes in a BasinGrid besides attractor labels.
inline constexpr int kInvalidCell = -1;
inline constexpr int kUnresolvedCell = -2;

struct BasinGrid {
    double L = 0.0;
    int resolution = 0;
    /// Row-major: classes[j * resolution + i] for alpha_w index i, alpha_b index j.
    /// Values are Label indices, kInvalidCell or kUnresolvedCell.
    std::vector<int> classes;
    std::vector<Equilibrium> attractors;  ///< stable equilibria at L (the legend)
    std::size_t unresolved = 0;

    [[nodiscard]] int at(int i, int j) const { return classes[static_cast<std::size_t>(j * resolution + i)]; }
    [[nodiscard]] double cell_width() const { return 1.0 / resolution; }
    [[nodiscard]] State center(int i, int j) const {
        return {(i + 0.5) / resolution, (j + 0.5) / resolution};
    }
    /// Indices of the cell containing x, clamped to the grid.
    [[nodiscard]] std::pair<int, int> cell_of(State x) const {
        auto idx = [&](double a) { return std::clamp(static_cast<int>(std::floor(a * resolution)), 0, resolution - 1); };
        return {idx(x.alpha_w), idx(x.alpha_b)};
    }
    /// Fraction of valid cells classified as `l`.
    [[nodiscard]] double area_fraction(Label l) const {
        std::size_t valid = 0, hits = 0;
        for (int c : classes) {
            if (c == kInvalidCell) continue;
            ++valid;
            if (c == static_cast<int>(l)) ++hits;
        }
        return valid ? static_cast<double>(hits) / static_cast<double>(valid) : 0.0;
    }
};

struct BasinOptions {
    solver::IntegratorOptions integrator{};
    unsigned workers = 1;
    /// Unresolved share of valid cells that turns into an error.
    double max_unresolved_fraction = 0.01;
};

/// Class of the grid cell (i, j): attractor reached from its center.
[[nodiscard]] inline int classify_cell(double L, int resolution, int i, int j, const std::vector<Equilibrium>& known,
                                       const Params& p, const solver::IntegratorOptions& iopts = {}) {
    const State c{(i + 0.5) / resolution, (j + 0.5) / resolution};
    if (!in_simplex(c)) return kInvalidCell;
    const auto res = solver::converge_to_attractor(c, L, known, iopts, p);
    return res.attractor ? static_cast<int>(*res.attractor) : kUnresolvedCell;
}

/// Classifies every cell center in the unit square by the attractor it
/// reaches at frozen L; cells outside the simplex are invalid.
[[nodiscard]] inline BasinGrid basin_grid(double L, int resolution, const Params& p, const BasinOptions& opts = {}) {
    if (resolution < 2) throw ConfigError("basin_grid: resolution must be at least 2");
    const auto known = equilibria::enumerate_equilibria(L, p);
    BasinGrid grid;
    grid.L = L;
    grid.resolution = resolution;
    for (const auto& e : known) {
        if (e.is_stable()) grid.attractors.push_back(e);
    }
    if (grid.attractors.empty()) throw ConfigError("basin_grid: no stable equilibrium at L = " + std::to_string(L));

    const auto n = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
    grid.classes.assign(n, kInvalidCell);
    parallel_for(n, opts.workers, [&](std::size_t k) {
        const int i = static_cast<int>(k % static_cast<std::size_t>(resolution));
        const int j = static_cast<int>(k / static_cast<std::size_t>(resolution));
        grid.classes[k] = classify_cell(L, resolution, i, j, known, p, opts.integrator);
    });

    std::size_t valid = 0;
    for (int c : grid.classes) {
        if (c != kInvalidCell) ++valid;
        if (c == kUnresolvedCell) ++grid.unresolved;
    }
    if (static_cast<double>(grid.unresolved) > opts.max_unresolved_fraction * static_cast<double>(valid)) {
        throw ConvergenceError("basin_grid: " + std::to_string(grid.unresolved) + " of " + std::to_string(valid) +
                               " cells unresolved at L = " + std::to_string(L));
    }
    return grid;
}

/// True iff the frozen-in state of `eq` runs to the dead planet at L_test.
[[nodiscard]] inline bool is_basin_unstable(const Equilibrium& eq, double L_test, const Params& p,
                                            const solver::IntegratorOptions& iopts = {}) {
    const auto known = equilibria::enumerate_equilibria(L_test, p);
    const auto res = solver::converge_to_attractor(eq.state, L_test, known, iopts, p);
    if (!res.resolved()) {
        throw ConvergenceError("is_basin_unstable: no attractor reached at L = " + std::to_string(L_test));
    }
    return *res.attractor == Label::e0;
}

/// Luminosity where `eq` (taken at its own L) first sits on the dead-planet
/// basin boundary, by bisection to |dL| < tol within [lo, hi].
[[nodiscard]] inline double find_L_BI(const Equilibrium& eq, double lo, double hi, const Params& p, double tol = 1e-4,
                                      const solver::IntegratorOptions& iopts = {}) {
    if (!(lo < hi)) throw BracketError(BracketError::Reason::invalid, "find_L_BI: empty bracket");
    if (is_basin_unstable(eq, lo, p, iopts)) {
        throw BracketError(BracketError::Reason::invalid, "find_L_BI: already basin unstable at the low end");
    }
    if (!is_basin_unstable(eq, hi, p, iopts)) {
        throw BracketError(BracketError::Reason::invalid, "find_L_BI: not basin unstable at the high end");
    }
    const auto [a, b] =
        numerics::bisect_predicate([&](double L) { return is_basin_unstable(eq, L, p, iopts); }, lo, hi, tol);
    return 0.5 * (a + b);
}

}  // namespace daisyworld::geometry
