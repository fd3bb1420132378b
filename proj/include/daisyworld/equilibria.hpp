#pragma once

// Equilibria e0..e5 at fixed luminosity.
//
// The axes alpha_w = 0 and alpha_b = 0 are invariant, so single-species
// states reduce to scalar root finding along an axis. Coexistence has a
// closed-form reduction: both growth brackets vanish, so
// beta(T_w) = beta(T_b) = gamma / alpha_g. The quadratic growth curve then
// forces T_w + T_b = 2 T_opt, and differencing the local temperature
// relation gives T_b^4 - T_w^4 = q (A_w - A_b). That pins T_b independently
// of L; alpha_g, A and finally (alpha_w, alpha_b) follow by substitution.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/model.hpp"
#include "daisyworld/numerics.hpp"

namespace daisyworld::equilibria {

/// Residual bound every reported equilibrium satisfies.
inline constexpr double kResidualTol = 1e-10;
/// Two equilibria closer than this are the same point.
inline constexpr double kMatchTol = 1e-6;
/// |Re(lambda)| below this marks an equilibrium as marginal.
inline constexpr double kMarginalTol = 1e-8;

enum class Species { white, black };

struct JacobianOptions {
    double step = 0.0;          ///< 0 selects 1e-7 * max(1, |alpha|) per column
    bool strict_cutoff = false;  ///< throw instead of flagging near a growth window edge
};

/// Central-difference d(rhs)/d(alpha_w, alpha_b).
[[nodiscard]] inline Eigen::Matrix2d jacobian(State s, double L, const Params& p, const JacobianOptions& opts = {}) {
    if (opts.strict_cutoff && near_growth_cutoff(s, L, p)) {
        throw DomainError("jacobian: local temperature within 0.5 K of a growth window edge");
    }
    Eigen::Matrix2d J;
    for (int col = 0; col < 2; ++col) {
        const double a = col == 0 ? s.alpha_w : s.alpha_b;
        const double h = opts.step > 0.0 ? opts.step : 1e-7 * std::max(1.0, std::abs(a));
        State plus = s, minus = s;
        (col == 0 ? plus.alpha_w : plus.alpha_b) += h;
        (col == 0 ? minus.alpha_w : minus.alpha_b) -= h;
        const State fp = rhs_unchecked(plus, L, p);
        const State fm = rhs_unchecked(minus, L, p);
        J(0, col) = (fp.alpha_w - fm.alpha_w) / (2.0 * h);
        J(1, col) = (fp.alpha_b - fm.alpha_b) / (2.0 * h);
    }
    return J;
}

/// Central-difference d(rhs)/dL.
[[nodiscard]] inline Eigen::Vector2d luminosity_derivative(State s, double L, const Params& p) {
    const double h = 1e-7 * std::max(1.0, std::abs(L));
    const State fp = rhs_unchecked(s, L + h, p);
    const State fm = rhs_unchecked(s, L - h, p);
    return {(fp.alpha_w - fm.alpha_w) / (2.0 * h), (fp.alpha_b - fm.alpha_b) / (2.0 * h)};
}

/// Closed-form eigenvalues of a real 2x2 matrix, ordered by real part.
[[nodiscard]] inline std::array<std::complex<double>, 2> eigenvalues(const Eigen::Matrix2d& J) {
    const double tr = J.trace();
    const double det = J.determinant();
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        // avoid cancellation in the smaller-magnitude root
        const double big = tr >= 0.0 ? 0.5 * (tr + root) : 0.5 * (tr - root);
        const double small = big != 0.0 ? det / big : 0.0;
        return {std::complex<double>(std::min(big, small)), std::complex<double>(std::max(big, small))};
    }
    const double im = 0.5 * std::sqrt(-disc);
    return {std::complex<double>(0.5 * tr, -im), std::complex<double>(0.5 * tr, im)};
}

/// Stability class from eigenvalues. Equal real eigenvalues count as a node.
[[nodiscard]] inline Stability classify(const std::array<std::complex<double>, 2>& ev) {
    const bool complex_pair = ev[0].imag() != 0.0;
    const double r0 = ev[0].real(), r1 = ev[1].real();
    if (complex_pair) return r0 < 0.0 ? Stability::stable_focus : Stability::unstable_focus;
    if (r0 < 0.0 && r1 < 0.0) return Stability::stable_node;
    if (r0 > 0.0 && r1 > 0.0) return Stability::unstable_node;
    return Stability::saddle;
}

/// Builds a classified Equilibrium for a state already known to be a root.
[[nodiscard]] inline Equilibrium make_equilibrium(State s, double L, Label label, const Params& p) {
    Equilibrium eq;
    eq.state = s;
    eq.L = L;
    eq.label = label;
    eq.eigenvalues = eigenvalues(jacobian(s, L, p));
    eq.stability = classify(eq.eigenvalues);
    eq.marginal = std::abs(eq.eigenvalues[0].real()) < kMarginalTol || std::abs(eq.eigenvalues[1].real()) < kMarginalTol;
    eq.T_e = climate(s, L, p).T_e;
    eq.near_cutoff = near_growth_cutoff(s, L, p);
    return eq;
}

/// Newton iteration on rhs = 0 at fixed L with the finite-difference Jacobian.
[[nodiscard]] inline State newton_refine(State x, double L, const Params& p, double tol = 1e-12, int max_iter = 50) {
    for (int it = 0; it <= max_iter; ++it) {
        const State f = rhs_unchecked(x, L, p);
        if (norm_inf(f) < tol) return x;
        if (it == max_iter) break;
        const Eigen::Matrix2d J = jacobian(x, L, p);
        const Eigen::Vector2d dx = J.partialPivLu().solve(Eigen::Vector2d(-f.alpha_w, -f.alpha_b));
        if (!dx.allFinite()) break;
        x = {x.alpha_w + dx(0), x.alpha_b + dx(1)};
    }
    throw ConvergenceError("newton_refine: no convergence at L = " + std::to_string(L));
}

/// L-independent part of the coexistence state.
struct CoexistenceTemperatures {
    double T_b = 0.0;
    double T_w = 0.0;
    double alpha_g = 0.0;
};

/// Solves T_b^4 - (2 T_opt - T_b)^4 = q (A_w - A_b) on (T_opt, T_opt + 1/sqrt(k)).
[[nodiscard]] inline CoexistenceTemperatures coexistence_temperatures(const Params& p) {
    const double target = p.q * (p.A_w - p.A_b);
    auto condition = [&](double Tb) {
        const double Tw = 2.0 * p.T_opt - Tb;
        return Tb * Tb * Tb * Tb - Tw * Tw * Tw * Tw - target;
    };
    const double lo = p.T_opt;
    const double hi = p.T_opt + p.growth_half_width();
    if ((condition(lo) < 0.0) == (condition(hi) < 0.0)) {
        throw BracketError(BracketError::Reason::no_root, "no coexistence root inside the growth window");
    }
    CoexistenceTemperatures ct;
    ct.T_b = numerics::bisect_root(condition, lo, hi);
    ct.T_w = 2.0 * p.T_opt - ct.T_b;
    const double growth = growth_rate(ct.T_b, p);
    ct.alpha_g = growth > 0.0 ? p.gamma / growth : std::numeric_limits<double>::infinity();
    return ct;
}

/// The coexistence equilibrium e5 at L, or nullopt where it leaves the open
/// simplex. Throws BracketError when the temperature condition has no root.
[[nodiscard]] inline std::optional<Equilibrium> coexistence_analytic(double L, const Params& p) {
    const CoexistenceTemperatures ct = coexistence_temperatures(p);
    if (!(growth_rate(ct.T_b, p) > 0.0) || !(ct.alpha_g < 1.0)) return std::nullopt;
    const double flux = p.flux_scale() * L;
    const double Tb4 = ct.T_b * ct.T_b * ct.T_b * ct.T_b;
    const double A = (Tb4 + p.q * p.A_b - flux) / (p.q - flux);
    // albedo mixing with alpha_w + alpha_b = 1 - alpha_g
    const double cover = 1.0 - ct.alpha_g;
    const double alpha_w = (A - ct.alpha_g * p.A_g - cover * p.A_b) / (p.A_w - p.A_b);
    const double alpha_b = cover - alpha_w;
    if (!(alpha_w > 0.0 && alpha_b > 0.0)) return std::nullopt;
    return make_equilibrium({alpha_w, alpha_b}, L, Label::e5, p);
}

namespace detail {

inline State on_axis(Species sp, double a) { return sp == Species::white ? State{a, 0.0} : State{0.0, a}; }

inline double axis_condition(Species sp, double a, double L, const Params& p) {
    const LocalClimate c = daisyworld::detail::climate_unchecked(on_axis(sp, a), L, p);
    const double T = sp == Species::white ? c.T_w : c.T_b;
    return (1.0 - a) * growth_rate(T, p) - p.gamma;
}

/// Labels same-axis roots by how the axis condition crosses zero. A root
/// where it turns negative is stable along the axis and continues the
/// upper branch (e2/e4); the other continues the lower branch (e1/e3).
/// With two roots this gives the stable one the upper label and the saddle
/// the lower one, or the smaller cover the lower label if both are saddles.
inline void label_axis(std::vector<Equilibrium>& roots, const std::vector<bool>& descending, Species sp) {
    const Label lower = sp == Species::white ? Label::e1 : Label::e3;
    const Label upper = sp == Species::white ? Label::e2 : Label::e4;
    if (roots.size() > 2) {
        throw ConvergenceError("more than two single-species equilibria on one axis");
    }
    for (std::size_t i = 0; i < roots.size(); ++i) roots[i].label = descending[i] ? upper : lower;
    if (roots.size() == 2 && roots[0].label == roots[1].label) {
        const bool s0 = roots[0].is_stable(), s1 = roots[1].is_stable();
        const bool first_upper = s0 != s1 ? s0 : false;  // sorted by cover
        roots[0].label = first_upper ? upper : lower;
        roots[1].label = first_upper ? lower : upper;
    }
}

}  // namespace detail

/// Equilibria on one invariant axis: roots of (1 - alpha) beta(T(alpha)) = gamma
/// for alpha in (0, 1), found by dense sampling, bisection and Newton polish.
[[nodiscard]] inline std::vector<Equilibrium> single_species_equilibria(double L, Species sp, const Params& p,
                                                                        int samples = 1024) {
    samples = std::max(samples, 256);
    std::vector<double> grid(static_cast<std::size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / samples;
    grid.front() = 1e-12;
    grid.back() = 1.0 - 1e-12;

    auto h = [&](double a) { return detail::axis_condition(sp, a, L, p); };
    std::vector<Equilibrium> roots;
    std::vector<bool> descending;
    double prev = h(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = h(grid[i]);
        if ((prev < 0.0) != (cur < 0.0)) {
            const double a = numerics::bisect_root(h, grid[i - 1], grid[i]);
            State x = detail::on_axis(sp, a);
            try {
                x = newton_refine(x, L, p);
            } catch (const ConvergenceError&) {
                // bisection root already satisfies the scalar condition to roundoff
            }
            const double cover = sp == Species::white ? x.alpha_w : x.alpha_b;
            if (cover > 0.0 && cover < 1.0 && in_simplex(x)) {
                roots.push_back(make_equilibrium(x, L, sp == Species::white ? Label::e1 : Label::e3, p));
                descending.push_back(cur < 0.0);
            }
        }
        prev = cur;
    }
    // sampling already visits roots in increasing cover
    detail::label_axis(roots, descending, sp);
    return roots;
}

/// e0, the single-species states on both axes and e5, sorted by label.
/// Throws ConvergenceError if two distinct roots coincide.
[[nodiscard]] inline std::vector<Equilibrium> enumerate_equilibria(double L, const Params& p) {
    std::vector<Equilibrium> all;
    all.push_back(make_equilibrium({0.0, 0.0}, L, Label::e0, p));
    for (Species sp : {Species::white, Species::black}) {
        auto roots = single_species_equilibria(L, sp, p);
        all.insert(all.end(), roots.begin(), roots.end());
    }
    if (auto e5 = coexistence_analytic(L, p)) all.push_back(*e5);

    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (distance(all[i].state, all[j].state) < kMatchTol) {
                throw ConvergenceError("duplicate equilibria " + std::string(to_string(all[i].label)) + " and " +
                                       std::string(to_string(all[j].label)) + " at L = " + std::to_string(L));
            }
        }
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Equilibrium& a, const Equilibrium& b) { return a.label < b.label; });
    return all;
}

/// First equilibrium with the given label, if present.
[[nodiscard]] inline std::optional<Equilibrium> find_label(const std::vector<Equilibrium>& eqs, Label l) {
    for (const auto& e : eqs) {
        if (e.label == l) return e;
    }
    return std::nullopt;
}

}  // namespace daisyworld::equilibria
