#pragma once

// Pseudo-arclength continuation of equilibrium branches in (alpha_w, alpha_b, L),
// saddle-node detection, and slow-ramp (bifurcation-induced tipping) runs.

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
#include "daisyworld/solver.hpp"

namespace daisyworld::continuation {

struct ContinuationOptions {
    double ds_initial = 1e-2;
    double ds_min = 1e-5;
    double ds_max = 5e-2;
    double corrector_tol = 1e-12;
    int max_corrector_iter = 12;
    std::size_t max_points = 20000;
    /// Branches stop when a cover fraction they started with drops below this.
    double cover_floor = 1e-6;
    /// Initial direction along the branch: +1 toward larger L, -1 toward smaller.
    int direction = +1;
};

struct FoldPoint {
    Equilibrium equilibrium;
    double L_fold = 0.0;
    /// det(J) changed sign across the fold and one eigenvalue is near zero.
    bool eigen_confirmed = false;
};

enum class StopReason { range, simplex, closed, max_points, corrector };

[[nodiscard]] inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::range: return "range";
        case StopReason::simplex: return "simplex";
        case StopReason::closed: return "closed";
        case StopReason::max_points: return "max_points";
        case StopReason::corrector: return "corrector";
    }
    return "?";
}

struct Branch {
    std::string label;               ///< dead / white / black / coexistence
    std::vector<Equilibrium> points;
    std::vector<Eigen::Vector3d> tangents;  ///< unit tangents in (alpha_w, alpha_b, L)
    std::vector<FoldPoint> folds;
    StopReason stop = StopReason::range;
    bool truncated = false;          ///< corrector failed at ds_min
};

namespace detail {

using Vec3 = Eigen::Vector3d;

inline Vec3 pack(State s, double L) { return {s.alpha_w, s.alpha_b, L}; }
inline State state_of(const Vec3& y) { return {y(0), y(1)}; }

/// Rows [J_x | dF/dL] of the 2x3 extended Jacobian.
inline Eigen::Matrix<double, 2, 3> extended_jacobian(const Vec3& y, const Params& p) {
    Eigen::Matrix<double, 2, 3> M;
    M.leftCols<2>() = equilibria::jacobian(state_of(y), y(2), p);
    M.col(2) = equilibria::luminosity_derivative(state_of(y), y(2), p);
    return M;
}

/// Unit null vector of the extended Jacobian oriented along `hint`.
inline Vec3 tangent(const Vec3& y, const Vec3& hint, const Params& p) {
    const auto M = extended_jacobian(y, p);
    Vec3 n = Vec3(M.row(0).transpose()).cross(Vec3(M.row(1).transpose()));
    if (n.norm() < 1e-14) return hint.normalized();  // transcritical contact: null space is 2-D
    n.normalize();
    return n.dot(hint) < 0.0 ? Vec3(-n) : n;
}

struct Corrected {
    Vec3 y;
    int iterations = 0;
};

/// Newton on {rhs = 0, dir . (y - base) = ds} starting from `guess`.
inline std::optional<Corrected> correct(const Vec3& guess, const Vec3& base, const Vec3& dir, double ds,
                                        const Params& p, const ContinuationOptions& opts) {
    Vec3 y = guess;
    for (int it = 0; it <= opts.max_corrector_iter; ++it) {
        if (!(y(2) > 0.0) || !in_simplex(state_of(y), 0.5)) return std::nullopt;
        State f;
        try {
            f = rhs_unchecked(state_of(y), y(2), p);
        } catch (const DomainError&) {
            return std::nullopt;
        }
        const double g = dir.dot(y - base) - ds;
        if (norm_inf(f) < opts.corrector_tol && std::abs(g) < 1e-12) return Corrected{y, it};
        if (it == opts.max_corrector_iter) break;
        Eigen::Matrix3d B;
        B.topRows<2>() = extended_jacobian(y, p);
        B.row(2) = dir.transpose();
        const Vec3 delta = B.partialPivLu().solve(Vec3(-f.alpha_w, -f.alpha_b, -g));
        if (!delta.allFinite()) return std::nullopt;
        y += delta;
        if (!y.allFinite()) return std::nullopt;
        // the axes are invariant: keep an absent species exactly absent
        for (int k = 0; k < 2; ++k) {
            if (base(k) == 0.0) y(k) = 0.0;
        }
    }
    return std::nullopt;
}

inline std::string branch_name(State s) {
    const bool w = s.alpha_w > 0.0, b = s.alpha_b > 0.0;
    if (w && b) return "coexistence";
    if (w) return "white";
    if (b) return "black";
    return "dead";
}

/// Label for a point on a branch: support decides the species, and on an
/// axis the sign of the along-axis eigenvalue picks upper (e2/e4) or lower
/// (e1/e3), the same rule enumeration uses.
inline Label point_label(State s, const Eigen::Matrix2d& J) {
    const bool w = s.alpha_w > 0.0, b = s.alpha_b > 0.0;
    if (w && b) return Label::e5;
    if (w) return J(0, 0) < 0.0 ? Label::e2 : Label::e1;
    if (b) return J(1, 1) < 0.0 ? Label::e4 : Label::e3;
    return Label::e0;
}

inline Equilibrium classified(const Vec3& y, const Params& p) {
    const State s = state_of(y);
    Equilibrium eq = equilibria::make_equilibrium(s, y(2), Label::e0, p);
    eq.label = point_label(s, equilibria::jacobian(s, y(2), p));
    return eq;
}

}  // namespace detail

/// Traces the branch through `start` within L_range = [L_lo, L_hi].
///
/// Secant predictor (tangent on the first step), bordered Newton corrector,
/// step doubling after fast corrections and halving after slow or failed
/// ones. Folds are traversed; the walk ends at the range boundary, when a
/// cover fraction the branch started with reaches cover_floor, when the
/// branch closes on itself, or after max_points.
[[nodiscard]] inline Branch continue_branch(const Equilibrium& start, double L_lo, double L_hi, const Params& p,
                                            const ContinuationOptions& opts = {}) {
    using detail::Vec3;
    if (!(L_lo < L_hi)) throw ConfigError("continue_branch: empty L range");
    if (start.L < L_lo - 1e-12 || start.L > L_hi + 1e-12) {
        throw ConfigError("continue_branch: start equilibrium lies outside the L range");
    }
    if (norm_inf(rhs(start.state, start.L, p)) > equilibria::kResidualTol) {
        throw DomainError("continue_branch: start point is not a converged equilibrium");
    }

    Branch br;
    br.label = detail::branch_name(start.state);
    const bool track_w = start.state.alpha_w > 0.0;
    const bool track_b = start.state.alpha_b > 0.0;

    Vec3 y = detail::pack(start.state, start.L);
    Vec3 t = detail::tangent(y, Vec3(0.0, 0.0, opts.direction >= 0 ? 1.0 : -1.0), p);
    br.points.push_back(detail::classified(y, p));
    br.tangents.push_back(t);

    const Vec3 origin = y;
    double ds = std::clamp(opts.ds_initial, opts.ds_min, opts.ds_max);
    double travelled = 0.0;
    Vec3 dir = t;

    while (true) {
        if (br.points.size() >= opts.max_points) {
            br.stop = StopReason::max_points;
            break;
        }
        const auto corr = detail::correct(y + ds * dir, y, dir, ds, p, opts);
        if (!corr) {
            ds *= 0.5;
            if (ds < opts.ds_min) {
                br.truncated = true;
                br.stop = StopReason::corrector;
                break;
            }
            continue;
        }
        const Vec3 y_new = corr->y;
        const State s_new = detail::state_of(y_new);

        // left the physical region or the tracked support
        const bool support_lost = (track_w && s_new.alpha_w < opts.cover_floor) ||
                                  (track_b && s_new.alpha_b < opts.cover_floor) ||
                                  (!track_w && std::abs(s_new.alpha_w) > 1e-12) ||
                                  (!track_b && std::abs(s_new.alpha_b) > 1e-12) ||
                                  s_new.alpha_w + s_new.alpha_b > 1.0;
        if (support_lost) {
            // creep up on the boundary before giving up
            if (ds > 2.0 * opts.ds_min) {
                ds = std::max(0.25 * ds, opts.ds_min);
                continue;
            }
            br.stop = StopReason::simplex;
            break;
        }

        if (y_new(2) < L_lo || y_new(2) > L_hi) {
            // land exactly on the boundary
            const double L_edge = y_new(2) < L_lo ? L_lo : L_hi;
            const double frac = (L_edge - y(2)) / (y_new(2) - y(2));
            const Vec3 guess = y + frac * (y_new - y);
            try {
                const State s_edge = equilibria::newton_refine(detail::state_of(guess), L_edge, p);
                const Vec3 y_edge = detail::pack(s_edge, L_edge);
                br.points.push_back(detail::classified(y_edge, p));
                br.tangents.push_back(detail::tangent(y_edge, dir, p));
            } catch (const ConvergenceError&) {
                // boundary point unreachable: keep the interior branch
            }
            br.stop = StopReason::range;
            break;
        }

        travelled += (y_new - y).norm();
        const Vec3 secant = (y_new - y).normalized();
        t = detail::tangent(y_new, secant, p);
        br.points.push_back(detail::classified(y_new, p));
        br.tangents.push_back(t);

        if (travelled > 4.0 * opts.ds_max && (y_new - origin).norm() < ds) {
            br.stop = StopReason::closed;
            break;
        }

        y = y_new;
        dir = secant;
        if (corr->iterations <= 3) {
            ds = std::min(2.0 * ds, opts.ds_max);
        } else if (corr->iterations > 8) {
            ds = std::max(0.5 * ds, opts.ds_min);
        }
    }
    return br;
}

/// Saddle-nodes along a branch: sign changes of dL/ds between consecutive
/// points, refined by bisection on arclength. Each fold is cross-checked
/// against a sign change of det(J); unconfirmed folds are still reported.
[[nodiscard]] inline std::vector<FoldPoint> detect_folds(const Branch& br, const Params& p, double L_tol = 1e-6) {
    using detail::Vec3;
    std::vector<FoldPoint> folds;
    if (br.points.size() < 3) return folds;
    const ContinuationOptions copts;

    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
        const double d0 = br.tangents[i](2), d1 = br.tangents[i + 1](2);
        if (d0 == 0.0 || (d0 > 0.0) == (d1 > 0.0)) continue;

        const Vec3 base = detail::pack(br.points[i].state, br.points[i].L);
        const Vec3 next = detail::pack(br.points[i + 1].state, br.points[i + 1].L);
        const Vec3 dir = (next - base).normalized();
        const double s_end = (next - base).norm();
        const Vec3 t_base = br.tangents[i];

        // tangent L-component at arclength s from `base`
        auto probe = [&](double s) -> std::optional<std::pair<Vec3, double>> {
            const auto c = detail::correct(base + s * dir, base, dir, s, p, copts);
            if (!c) return std::nullopt;
            return std::make_pair(c->y, detail::tangent(c->y, t_base, p)(2));
        };

        double lo = 0.0, hi = s_end;
        Vec3 y_lo = base, y_hi = next;
        bool ok = true;
        for (int it = 0; it < 200 && (std::abs(y_hi(2) - y_lo(2)) >= L_tol || hi - lo > 1e-9); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const auto pr = probe(mid);
            if (!pr) {
                ok = false;
                break;
            }
            if ((pr->second > 0.0) == (d0 > 0.0)) {
                lo = mid;
                y_lo = pr->first;
            } else {
                hi = mid;
                y_hi = pr->first;
            }
        }
        const Vec3 y_fold = ok ? Vec3(0.5 * (y_lo + y_hi)) : Vec3(0.5 * (base + next));
        FoldPoint fp;
        State s_fold = detail::state_of(y_fold);
        try {
            s_fold = equilibria::newton_refine(s_fold, y_fold(2), p);
        } catch (const ConvergenceError&) {
            // singular Jacobian at the fold; keep the bisection point
        }
        fp.equilibrium = detail::classified(detail::pack(s_fold, y_fold(2)), p);
        fp.L_fold = y_fold(2);
        const double det0 = equilibria::jacobian(br.points[i].state, br.points[i].L, p).determinant();
        const double det1 = equilibria::jacobian(br.points[i + 1].state, br.points[i + 1].L, p).determinant();
        const auto& ev = fp.equilibrium.eigenvalues;
        const double smallest = std::min(std::abs(ev[0].real()), std::abs(ev[1].real()));
        fp.eigen_confirmed = ok && (det0 > 0.0) != (det1 > 0.0) && smallest < 1e-3;
        folds.push_back(fp);
    }
    return folds;
}

/// Continuation followed by fold detection.
[[nodiscard]] inline Branch trace_branch(const Equilibrium& start, double L_lo, double L_hi, const Params& p,
                                         const ContinuationOptions& opts = {}) {
    Branch br = continue_branch(start, L_lo, L_hi, p, opts);
    br.folds = detect_folds(br, p);
    return br;
}

/// Continues from `start` in both directions and joins the halves into one
/// branch ordered by arclength, then locates folds.
[[nodiscard]] inline Branch trace_both_ways(const Equilibrium& start, double L_lo, double L_hi, const Params& p,
                                            ContinuationOptions opts = {}) {
    opts.direction = -1;
    Branch back = continue_branch(start, L_lo, L_hi, p, opts);
    opts.direction = +1;
    Branch fwd = continue_branch(start, L_lo, L_hi, p, opts);

    Branch joined;
    joined.label = fwd.label;
    for (std::size_t i = back.points.size(); i-- > 1;) {
        joined.points.push_back(back.points[i]);
        joined.tangents.push_back(-back.tangents[i]);
    }
    joined.points.insert(joined.points.end(), fwd.points.begin(), fwd.points.end());
    joined.tangents.insert(joined.tangents.end(), fwd.tangents.begin(), fwd.tangents.end());
    joined.stop = fwd.stop;
    joined.truncated = back.truncated || fwd.truncated;
    joined.folds = detect_folds(joined, p);
    return joined;
}

/// Linear ramp in L followed by a hold at the final value.
struct LinearRamp {
    double L_start = 0.0;
    double L_end = 0.0;
    double rate = 1e-3;  ///< |dL/dt|

    [[nodiscard]] double duration() const { return std::abs(L_end - L_start) / rate; }
    [[nodiscard]] double operator()(double t) const {
        if (t <= 0.0) return L_start;
        if (t >= duration()) return L_end;
        return L_start + (L_end > L_start ? 1.0 : -1.0) * rate * t;
    }
};

struct RampOutcome {
    solver::Trajectory trajectory;
    std::optional<Label> final_attractor;  ///< empty if unresolved
    bool collapsed = false;                ///< ended on the dead planet
};

/// Starts on `start`, ramps L linearly to `L_end` at `rate`, then holds L
/// and runs to an attractor. Collapse means the attractor is e0.
[[nodiscard]] inline RampOutcome quasistatic_ramp(const Equilibrium& start, double L_end, const Params& p,
                                                  double rate = 1e-3, const solver::IntegratorOptions& iopts = {}) {
    if (!(rate > 0.0)) throw ConfigError("quasistatic_ramp: rate must be positive");
    const LinearRamp ramp{start.L, L_end, rate};
    RampOutcome out;
    if (ramp.duration() > 0.0) {
        out.trajectory = solver::integrate_forced(start.state, ramp, {0.0, ramp.duration()}, iopts, p);
    } else {
        out.trajectory.push(0.0, start.state, start.L);
    }
    const auto known = equilibria::enumerate_equilibria(L_end, p);
    solver::ConvergeOptions copts;
    copts.record = true;
    const auto settle = solver::converge_to_attractor(out.trajectory.back(), L_end, known, iopts, p, copts,
                                                      out.trajectory.times.back());
    out.trajectory.append(settle.trajectory);
    out.final_attractor = settle.attractor;
    out.collapsed = settle.attractor == Label::e0;
    return out;
}

}  // namespace daisyworld::continuation
