#pragma once

// Rate-induced tipping experiments: a smooth tanh rise in luminosity from
// L_min to L_min + delta_L at rate r, starting on the coexistence state.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "daisyworld/equilibria.hpp"
#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/geometry.hpp"
#include "daisyworld/model.hpp"
#include "daisyworld/numerics.hpp"
#include "daisyworld/parallel.hpp"
#include "daisyworld/solver.hpp"

namespace daisyworld::tipping {

/// L(t) = L_min + delta_L / 2 * (tanh(r t) + 1).
struct ForcingSpec {
    double L_min = 0.8;
    double delta_L = 0.4;
    double r = 1.0;

    [[nodiscard]] double L_max() const { return L_min + delta_L; }
    [[nodiscard]] double operator()(double t) const { return L_min + 0.5 * delta_L * (std::tanh(r * t) + 1.0); }

    void check() const {
        if (!(L_min > 0.0)) throw ConfigError("forcing: L_min must be positive");
        if (!(delta_L >= 0.0)) throw ConfigError("forcing: delta_L must be non-negative");
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("forcing: r must be positive and finite");
    }
};

enum class Classification { tip, track, unresolved };

[[nodiscard]] inline std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::tip: return "tip";
        case Classification::track: return "track";
        default: return "unresolved";
    }
}

struct TippingOutcome {
    ForcingSpec forcing;
    Classification classification = Classification::unresolved;
    std::optional<Label> final_attractor;
    solver::Trajectory trajectory;  ///< forced window, then the frozen-L_max tail
    std::size_t forced_samples = 0;  ///< leading trajectory samples from the forced window
    bool crossed_manifold = false;
};

struct ExperimentOptions {
    solver::IntegratorOptions integrator{};
    /// Half window in units of 1/r: the forced run covers [-window/r, window/r].
    double window = 8.0;
    /// Insist that the coexistence state exists and is stable over all of
    /// [L_min, L_max]. When false only L_min is checked, which admits ramps
    /// that pass the end of the coexistence branch (bifurcation territory).
    bool require_coexistence = true;
    /// Test the trajectory against the stable manifold of the white-axis saddle.
    bool test_manifold = true;
    int manifold_samples = 33;
};

/// The coexistence equilibrium at L; ConfigError naming L if it is missing
/// or not stable there.
[[nodiscard]] inline Equilibrium stable_coexistence(double L, const Params& p) {
    auto e5 = equilibria::coexistence_analytic(L, p);
    if (!e5 || !e5->is_stable()) {
        throw ConfigError("coexistence equilibrium " + std::string(e5 ? "is not stable" : "does not exist") +
                          " at L = " + std::to_string(L));
    }
    return *e5;
}

/// Stable manifolds of the white-axis saddle at sampled L, used to decide on
/// which side of the moving separatrix each trajectory sample sits.
struct ManifoldSurface {
    std::vector<geometry::ManifoldCurve> curves;  ///< increasing L

    void build(double L_lo, double L_hi, int samples, const Params& p) {
        const int n = std::max(samples, 2);
        for (int i = 0; i < n; ++i) {
            const double L = L_lo + (L_hi - L_lo) * i / (n - 1);
            const auto e1 = equilibria::find_label(equilibria::enumerate_equilibria(L, p), Label::e1);
            if (e1 && e1->stability == Stability::saddle) curves.push_back(geometry::stable_manifold(*e1, p));
        }
    }

    /// Signed side at luminosity L, linear in L between samples; empty where
    /// the saddle does not exist.
    [[nodiscard]] std::optional<double> side(State x, double L) const {
        if (curves.empty() || L < curves.front().L - 1e-12 || L > curves.back().L + 1e-12) return std::nullopt;
        auto hi = std::lower_bound(curves.begin(), curves.end(), L,
                                   [](const geometry::ManifoldCurve& c, double v) { return c.L < v; });
        if (hi == curves.end()) hi = std::prev(curves.end());
        if (hi == curves.begin() || hi->L == L) return geometry::signed_side(*hi, x);
        const auto lo = std::prev(hi);
        const double w = (L - lo->L) / (hi->L - lo->L);
        return (1.0 - w) * geometry::signed_side(*lo, x) + w * geometry::signed_side(*hi, x);
    }
};

/// Starts exactly on the coexistence state at L_min, integrates the forced
/// system over the symmetric window, then continues at frozen L_max until an
/// attractor is reached.
[[nodiscard]] inline TippingOutcome run_experiment(const ForcingSpec& f, const Params& p,
                                                   const ExperimentOptions& opts = {}) {
    f.check();
    const double L_max = f.L_max();
    const Equilibrium start = stable_coexistence(f.L_min, p);
    if (opts.require_coexistence && f.delta_L > 0.0) {
        constexpr int kChecks = 8;
        for (int i = 1; i <= kChecks; ++i) (void)stable_coexistence(f.L_min + f.delta_L * i / kChecks, p);
    }

    TippingOutcome out;
    out.forcing = f;
    const double half = opts.window / f.r;
    out.trajectory = solver::integrate_forced(start.state, f, {-half, half}, opts.integrator, p);
    out.forced_samples = out.trajectory.size();

    const auto known = equilibria::enumerate_equilibria(L_max, p);
    solver::ConvergeOptions copts;
    copts.record = true;
    const auto settle =
        solver::converge_to_attractor(out.trajectory.back(), L_max, known, opts.integrator, p, copts, half);
    out.trajectory.append(settle.trajectory);
    out.final_attractor = settle.attractor;
    if (settle.attractor) {
        out.classification = *settle.attractor == Label::e0 ? Classification::tip : Classification::track;
    }

    if (opts.test_manifold) {
        ManifoldSurface family;
        family.build(f.L_min, L_max, opts.manifold_samples, p);
        for (std::size_t i = 0; i < out.trajectory.size(); ++i) {
            const auto s = family.side(out.trajectory.states[i], out.trajectory.forcing_values[i]);
            if (s && *s > 0.0) {
                out.crossed_manifold = true;
                break;
            }
        }
    }
    return out;
}

/// Closest approach of a trajectory to a point.
[[nodiscard]] inline double min_distance(const solver::Trajectory& traj, State target) {
    double best = std::numeric_limits<double>::infinity();
    for (const State& s : traj.states) best = std::min(best, distance(s, target));
    return best;
}

namespace detail {

inline bool tips(const ForcingSpec& f, const Params& p, const ExperimentOptions& opts) {
    const auto out = run_experiment(f, p, opts);
    if (out.classification == Classification::unresolved) {
        throw ConvergenceError("tipping experiment unresolved at r = " + std::to_string(f.r) +
                               ", delta_L = " + std::to_string(f.delta_L));
    }
    return out.classification == Classification::tip;
}

inline ExperimentOptions classification_only(ExperimentOptions opts) {
    opts.test_manifold = false;
    return opts;
}

}  // namespace detail

/// Rate separating tracking (below) from tipping (above) at fixed delta_L,
/// by bisection in log r to relative width `rel_tol`.
[[nodiscard]] inline double critical_rate(double L_min, double delta_L, double r_lo, double r_hi, const Params& p,
                                          const ExperimentOptions& opts = {}, double rel_tol = 1e-4) {
    if (!(r_lo > 0.0 && r_lo < r_hi)) throw BracketError(BracketError::Reason::invalid, "critical_rate: bad r bracket");
    const auto o = detail::classification_only(opts);
    auto tips_at = [&](double r) { return detail::tips({L_min, delta_L, r}, p, o); };
    if (!tips_at(r_hi)) {
        throw BracketError(BracketError::Reason::always_tracks,
                           "critical_rate: tracks even at r = " + std::to_string(r_hi) + " for delta_L = " +
                               std::to_string(delta_L));
    }
    if (tips_at(r_lo)) {
        throw BracketError(BracketError::Reason::always_tips,
                           "critical_rate: tips even at r = " + std::to_string(r_lo) + " for delta_L = " +
                               std::to_string(delta_L));
    }
    const auto [a, b] = numerics::bisect_predicate([&](double lr) { return tips_at(std::exp(lr)); }, std::log(r_lo),
                                                   std::log(r_hi), std::log1p(rel_tol));
    return std::exp(0.5 * (a + b));
}

/// Smallest delta_L that tips at rate r, by bisection within [dL_lo, dL_hi].
[[nodiscard]] inline double critical_delta_L(double L_min, double r, double dL_lo, double dL_hi, const Params& p,
                                             const ExperimentOptions& opts = {}, double tol = 1e-5) {
    if (!(dL_lo >= 0.0 && dL_lo < dL_hi)) {
        throw BracketError(BracketError::Reason::invalid, "critical_delta_L: bad delta_L bracket");
    }
    const auto o = detail::classification_only(opts);
    auto tips_at = [&](double dL) { return detail::tips({L_min, dL, r}, p, o); };
    if (!tips_at(dL_hi)) {
        throw BracketError(BracketError::Reason::always_tracks,
                           "critical_delta_L: tracks even at delta_L = " + std::to_string(dL_hi));
    }
    if (tips_at(dL_lo)) {
        throw BracketError(BracketError::Reason::always_tips,
                           "critical_delta_L: tips even at delta_L = " + std::to_string(dL_lo));
    }
    const auto [a, b] = numerics::bisect_predicate(tips_at, dL_lo, dL_hi, tol);
    return 0.5 * (a + b);
}

enum class Cell { track, tip, unresolved, no_coexistence };

[[nodiscard]] inline std::string_view to_string(Cell c) {
    switch (c) {
        case Cell::track: return "track";
        case Cell::tip: return "tip";
        case Cell::unresolved: return "unresolved";
        default: return "no_coexistence";
    }
}

struct DiagramOptions {
    ExperimentOptions experiment{};
    unsigned workers = 1;
    double delta_L_tol = 1e-5;  ///< bisection width for the critical curve
};

struct Diagram {
    double L_min = 0.0;
    std::vector<double> r_grid;
    std::vector<double> delta_L_grid;
    /// cells[i * delta_L_grid.size() + j] for r index i, delta_L index j.
    std::vector<Cell> cells;
    /// Per-r smallest tipping delta_L; NaN where no resolved cell tips.
    std::vector<double> critical_delta_L;
    std::size_t unresolved = 0;

    [[nodiscard]] Cell at(std::size_t i, std::size_t j) const { return cells[i * delta_L_grid.size() + j]; }
};

/// r values log-spaced over [lo, hi].
[[nodiscard]] inline std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi > lo && n >= 2)) throw ConfigError("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    g.back() = hi;
    return g;
}

/// Values linearly spaced over [lo, hi].
[[nodiscard]] inline std::vector<double> linear_grid(double lo, double hi, int n) {
    if (!(hi > lo && n >= 2)) throw ConfigError("linear_grid: need lo < hi and n >= 2");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

namespace detail {

inline void require_sorted_positive(const std::vector<double>& g, const char* name) {
    if (g.empty()) throw ConfigError(std::string("tipping_diagram: empty ") + name + " grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0) || (i > 0 && !(g[i] > g[i - 1]))) {
            throw ConfigError(std::string("tipping_diagram: ") + name + " grid must be positive and increasing");
        }
    }
}

/// True iff the coexistence state is stable over all of [L_min, L_min + dL].
inline bool coexistence_covers(double L_min, double dL, const Params& p) {
    constexpr int kChecks = 8;
    for (int i = 0; i <= kChecks; ++i) {
        const auto e5 = equilibria::coexistence_analytic(L_min + dL * i / kChecks, p);
        if (!e5 || !e5->is_stable()) return false;
    }
    return true;
}

}  // namespace detail

/// Classifies every (r, delta_L) pair and extracts, for each r, the critical
/// delta_L by bisection between the last tracking and first tipping rows.
[[nodiscard]] inline Diagram tipping_diagram(double L_min, const std::vector<double>& r_grid,
                                             const std::vector<double>& delta_L_grid, const Params& p,
                                             const DiagramOptions& opts = {}) {
    detail::require_sorted_positive(r_grid, "r");
    detail::require_sorted_positive(delta_L_grid, "delta_L");
    (void)stable_coexistence(L_min, p);

    Diagram d;
    d.L_min = L_min;
    d.r_grid = r_grid;
    d.delta_L_grid = delta_L_grid;
    const std::size_t nr = r_grid.size(), nd = delta_L_grid.size();
    d.cells.assign(nr * nd, Cell::unresolved);

    std::vector<bool> covered(nd);
    for (std::size_t j = 0; j < nd; ++j) covered[j] = detail::coexistence_covers(L_min, delta_L_grid[j], p);

    ExperimentOptions eopts = detail::classification_only(opts.experiment);
    eopts.require_coexistence = true;
    parallel_for(nr * nd, opts.workers, [&](std::size_t k) {
        const std::size_t i = k / nd, j = k % nd;
        if (!covered[j]) {
            d.cells[k] = Cell::no_coexistence;
            return;
        }
        const auto out = run_experiment({L_min, delta_L_grid[j], r_grid[i]}, p, eopts);
        d.cells[k] = out.classification == Classification::tip     ? Cell::tip
                     : out.classification == Classification::track ? Cell::track
                                                                   : Cell::unresolved;
    });
    for (Cell c : d.cells) {
        if (c == Cell::unresolved) ++d.unresolved;
    }

    d.critical_delta_L.assign(nr, std::numeric_limits<double>::quiet_NaN());
    parallel_for(nr, opts.workers, [&](std::size_t i) {
        std::optional<std::size_t> first_tip;
        for (std::size_t j = 0; j < nd; ++j) {
            if (d.at(i, j) == Cell::tip) {
                first_tip = j;
                break;
            }
        }
        if (!first_tip) return;
        const std::size_t j = *first_tip;
        if (j == 0 || d.at(i, j - 1) != Cell::track) {
            d.critical_delta_L[i] = delta_L_grid[j];  // no tracking row below to bracket with
            return;
        }
        d.critical_delta_L[i] = critical_delta_L(L_min, r_grid[i], delta_L_grid[j - 1], delta_L_grid[j], p, eopts,
                                                 opts.delta_L_tol);
    });
    return d;
}

}  // namespace daisyworld::tipping
