#pragma once

// Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4), FSAL) for
// autonomous and forced Daisyworld trajectories, plus the chunked
// "run until settled on a known attractor" driver.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/model.hpp"

namespace daisyworld::solver {

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 5.0;
    double initial_step = 1e-2;
    double max_time = 1e5;

    void check() const {
        if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw ConfigError("integrator tolerances must be positive");
        if (!(max_step > 0.0 && initial_step > 0.0)) throw ConfigError("integrator step sizes must be positive");
        if (!(max_time > 0.0)) throw ConfigError("integrator max_time must be positive");
    }
};

struct Interval {
    double t0 = 0.0;
    double t1 = 0.0;
};

/// Accepted steps of one integration. `forcing_values` is empty for
/// autonomous runs.
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> forcing_values;

    [[nodiscard]] bool forced() const { return !forcing_values.empty(); }
    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] State back() const { return states.back(); }

    void push(double t, State x) {
        times.push_back(t);
        states.push_back(x);
    }
    void push(double t, State x, double L) {
        push(t, x);
        forcing_values.push_back(L);
    }
    /// Appends `tail`, skipping a leading sample that duplicates our last time.
    void append(const Trajectory& tail) {
        for (std::size_t i = 0; i < tail.size(); ++i) {
            if (!times.empty() && tail.times[i] <= times.back()) continue;
            times.push_back(tail.times[i]);
            states.push_back(tail.states[i]);
            if (tail.forced()) forcing_values.push_back(tail.forcing_values[i]);
        }
    }
};

struct StepperResult {
    double t = 0.0;
    State x;
    double last_step = 0.0;
    bool stopped = false;  ///< observer asked to stop before t1
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) on [t0, t1] with t1 > t0.
///
/// `field(t, x)` evaluates the vector field at stage points (may be called
/// slightly outside the simplex). `admissible(x)` vets each candidate
/// accepted state; a rejection shrinks the step. `observer(t, x)` sees every
/// accepted step and returns false to stop early.
template <class Field, class Admissible, class Observer>
StepperResult dopri5(Field&& field, double t0, State x0, double t1, const IntegratorOptions& opts,
                     Admissible&& admissible, Observer&& observer) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    opts.check();
    StepperResult out;
    out.t = t0;
    out.x = x0;
    if (!(t1 > t0)) throw DomainError("dopri5: empty time span");

    double t = t0;
    State x = x0;
    double h = std::min({opts.initial_step, opts.max_step, t1 - t0});
    State k1 = field(t, x);
    int consecutive_inadmissible = 0;

    while (t < t1) {
        const double h_free = h;
        if (t + h > t1 || t1 - (t + h) < 1e-12 * std::max(1.0, std::abs(t1))) h = t1 - t;
        if (t + h == t) {
            throw StiffnessError("step size underflow at t = " + std::to_string(t));
        }

        const State k2 = field(t + c2 * h, x + (h * a21) * k1);
        const State k3 = field(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
        const State k4 = field(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const State k5 = field(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State k6 = field(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const State x_new = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const State k7 = field(t + h, x_new);
        const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        auto scaled = [&](double e, double a, double b) {
            return std::abs(e) / (opts.abs_tol + opts.rel_tol * std::max(std::abs(a), std::abs(b)));
        };
        const double err_norm =
            std::max(scaled(err.alpha_w, x.alpha_w, x_new.alpha_w), scaled(err.alpha_b, x.alpha_b, x_new.alpha_b));

        if (!std::isfinite(err_norm)) {
            h *= 0.25;
            ++out.rejected;
            continue;
        }
        if (err_norm <= 1.0) {
            if (!admissible(x_new)) {
                if (++consecutive_inadmissible > 200) {
                    throw StiffnessError("integrator cannot keep the state admissible at t = " + std::to_string(t));
                }
                h *= 0.25;
                ++out.rejected;
                continue;
            }
            consecutive_inadmissible = 0;
            t = (h == t1 - t) ? t1 : t + h;
            x = x_new;
            k1 = k7;
            ++out.accepted;
            out.t = t;
            out.x = x;
            const double grow = err_norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err_norm, -0.2));
            h = std::min(h * grow, opts.max_step);
            out.last_step = std::min(std::max(h, h_free), opts.max_step);
            if (!observer(t, x)) {
                out.stopped = true;
                return out;
            }
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
            ++out.rejected;
        }
    }
    return out;
}

namespace detail {

inline void require_start(State x0, Interval span) {
    if (!in_simplex(x0, kSimplexSlack)) throw DomainError("integration start state lies outside the simplex");
    if (!(span.t1 > span.t0)) throw DomainError("integration time span is empty");
}

inline bool admissible(State x) { return in_simplex(x, kSimplexSlack); }

}  // namespace detail

/// Fixed-luminosity ("frozen") integration. Every accepted step is recorded.
[[nodiscard]] inline Trajectory integrate_autonomous(State x0, double L, Interval span, const IntegratorOptions& opts,
                                                     const Params& p) {
    detail::require_start(x0, span);
    Trajectory traj;
    traj.push(span.t0, x0);
    dopri5([&](double, State x) { return rhs_unchecked(x, L, p); }, span.t0, x0, span.t1, opts, detail::admissible,
           [&](double t, State x) {
               traj.push(t, x);
               return true;
           });
    return traj;
}

/// Integration with luminosity `forcing(t)` evaluated at every stage time.
template <class Forcing>
[[nodiscard]] Trajectory integrate_forced(State x0, const Forcing& forcing, Interval span, const IntegratorOptions& opts,
                                          const Params& p) {
    detail::require_start(x0, span);
    Trajectory traj;
    traj.push(span.t0, x0, forcing(span.t0));
    dopri5([&](double t, State x) { return rhs_unchecked(x, forcing(t), p); }, span.t0, x0, span.t1, opts,
           detail::admissible, [&](double t, State x) {
               traj.push(t, x, forcing(t));
               return true;
           });
    return traj;
}

struct ConvergeOptions {
    double chunk = 50.0;
    double rhs_tol = 1e-10;
    /// Tolerance factor for the final approach once within match_tol of a
    /// stable equilibrium, where default-tolerance steps stall at a residual
    /// near rel_tol.
    double polish_factor = 1e-2;
    double match_tol = 1e-6;
    bool record = false;  ///< keep the trajectory in the result
};

struct AttractorResult {
    std::optional<Label> attractor;  ///< empty means unresolved
    State final_state;
    double elapsed = 0.0;
    Trajectory trajectory;  ///< filled when ConvergeOptions::record is set

    [[nodiscard]] bool resolved() const { return attractor.has_value(); }
};

/// Integrates at fixed L in chunks until the state is settled on one of the
/// stable entries of `known` (residual below rhs_tol and within match_tol).
/// Gives up as unresolved after opts.max_time; never guesses.
[[nodiscard]] inline AttractorResult converge_to_attractor(State x0, double L, std::span<const Equilibrium> known,
                                                           const IntegratorOptions& opts, const Params& p,
                                                           const ConvergeOptions& copts = {}, double t_start = 0.0) {
    if (!in_simplex(x0, kSimplexSlack)) throw DomainError("converge_to_attractor: start state outside the simplex");
    AttractorResult res;
    State x = x0;
    double t = t_start;
    IntegratorOptions chunk_opts = opts;
    if (copts.record) res.trajectory.push(t, x, L);

    auto nearby = [&]() -> std::optional<Label> {
        for (const Equilibrium& eq : known) {
            if (eq.is_stable() && distance(eq.state, x) < copts.match_tol) return eq.label;
        }
        return std::nullopt;
    };
    auto settled = [&]() -> std::optional<Label> {
        if (norm_inf(rhs_unchecked(x, L, p)) >= copts.rhs_tol) return std::nullopt;
        return nearby();
    };
    bool polishing = false;

    while (true) {
        if (auto hit = settled()) {
            res.attractor = hit;
            break;
        }
        if (t - t_start >= opts.max_time) break;
        if (!polishing && nearby()) {
            polishing = true;
            chunk_opts.rel_tol *= copts.polish_factor;
            chunk_opts.abs_tol *= copts.polish_factor;
        }
        const double t_end = std::min(t + copts.chunk, t_start + opts.max_time);
        const StepperResult step = dopri5([&](double, State s) { return rhs_unchecked(s, L, p); }, t, x, t_end,
                                          chunk_opts, detail::admissible, [&](double ts, State xs) {
                                              if (copts.record) res.trajectory.push(ts, xs, L);
                                              return true;
                                          });
        t = step.t;
        x = step.x;
        if (step.last_step > 0.0) chunk_opts.initial_step = step.last_step;
    }
    res.final_state = x;
    res.elapsed = t - t_start;
    return res;
}

}  // namespace daisyworld::solver
