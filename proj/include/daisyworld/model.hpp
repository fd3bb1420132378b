#pragma once

// Daisyworld energy balance and population dynamics.
//
// Two daisy species (white, black) and bare ground share the planet surface.
// Cover fractions evolve by logistic-style growth whose rate depends on the
// local temperature, and local temperatures follow from the planetary albedo
// through a radiative balance plus horizontal heat transfer.

#include <algorithm>
#include <cmath>
#include <string>

#include "daisyworld/errors.hpp"

namespace daisyworld {

/// Physical constants and model parameters. Defaults are the classic
/// Watson & Lovelock values with q = 0.1 S / sigma.
struct Params {
    double gamma = 0.3;               ///< death rate, per unit model time
    double k = 0.003265;              ///< growth-curve curvature, K^-2
    double T_opt = 295.5;             ///< optimum growth temperature, K
    double S = 917.0;                 ///< solar flux constant, W m^-2
    double sigma = 5.670374419e-8;    ///< Stefan-Boltzmann constant, W m^-2 K^-4
    double A_w = 0.75;                ///< white daisy albedo
    double A_b = 0.25;                ///< black daisy albedo
    double A_g = 0.5;                 ///< bare ground albedo
    double q = 0.1 * 917.0 / 5.670374419e-8;  ///< heat transfer coefficient, K^4

    /// Half width of the growth window, 1/sqrt(k).
    [[nodiscard]] double growth_half_width() const { return 1.0 / std::sqrt(k); }
    /// S / sigma, the flux-to-T^4 conversion.
    [[nodiscard]] double flux_scale() const { return S / sigma; }

    friend bool operator==(const Params&, const Params&) = default;
};

/// Throws ConfigError unless the parameter invariants hold for every
/// luminosity in [L_lo, L_hi].
inline void validate(const Params& p, double L_lo, double L_hi) {
    auto fail = [](const std::string& what) { throw ConfigError("invalid parameters: " + what); };
    if (!(0.0 <= p.A_b && p.A_b < p.A_g && p.A_g < p.A_w && p.A_w <= 1.0)) {
        fail("albedos must satisfy 0 <= A_b < A_g < A_w <= 1");
    }
    if (!(p.gamma > 0.0 && p.gamma < 1.0)) fail("gamma must lie in (0, 1)");
    if (!(p.k > 0.0)) fail("k must be positive");
    if (!(p.S > 0.0)) fail("S must be positive");
    if (!(p.sigma > 0.0)) fail("sigma must be positive");
    if (!(p.q >= 0.0)) fail("q must be non-negative");
    if (!(L_lo > 0.0 && L_lo <= L_hi)) fail("luminosity range must be positive and ordered");
    if (!(p.q < p.flux_scale() * L_lo)) fail("q must be below S*L/sigma for every L in the analysis");
}

/// Daisy cover fractions, the phase-space point. Bare ground is derived.
struct State {
    double alpha_w = 0.0;
    double alpha_b = 0.0;

    [[nodiscard]] double alpha_g() const { return 1.0 - alpha_w - alpha_b; }

    friend State operator+(State a, State b) { return {a.alpha_w + b.alpha_w, a.alpha_b + b.alpha_b}; }
    friend State operator-(State a, State b) { return {a.alpha_w - b.alpha_w, a.alpha_b - b.alpha_b}; }
    friend State operator*(double s, State a) { return {s * a.alpha_w, s * a.alpha_b}; }
    friend bool operator==(const State&, const State&) = default;
};

[[nodiscard]] inline double norm_inf(State s) { return std::max(std::abs(s.alpha_w), std::abs(s.alpha_b)); }
[[nodiscard]] inline double distance(State a, State b) { return std::hypot(a.alpha_w - b.alpha_w, a.alpha_b - b.alpha_b); }

/// Slack allowed outside the physical simplex for integrator overshoot.
inline constexpr double kSimplexSlack = 1e-9;

[[nodiscard]] inline bool in_simplex(State s, double slack = 0.0) {
    return s.alpha_w >= -slack && s.alpha_b >= -slack && s.alpha_w + s.alpha_b <= 1.0 + slack;
}

/// Planetary albedo and local surface temperatures.
struct LocalClimate {
    double A = 0.0;    ///< planetary albedo
    double T_e = 0.0;  ///< emission temperature, K
    double T_w = 0.0;  ///< over white daisies, K
    double T_b = 0.0;  ///< over black daisies, K
    double T_g = 0.0;  ///< over bare ground, K
};

namespace detail {

inline void require_simplex(State s, double slack, const char* who) {
    if (!in_simplex(s, slack)) {
        throw DomainError(std::string(who) + ": state (" + std::to_string(s.alpha_w) + ", " +
                          std::to_string(s.alpha_b) + ") lies outside the simplex");
    }
}

inline double albedo_unchecked(State s, const Params& p) {
    return s.alpha_w * p.A_w + s.alpha_b * p.A_b + s.alpha_g() * p.A_g;
}

inline double local_temperature(double radicand) {
    if (!(radicand > 0.0)) {
        throw NonphysicalHeatTransfer("nonphysical heat transfer: local T^4 = " + std::to_string(radicand) +
                                      " (q too large for this L)");
    }
    return std::sqrt(std::sqrt(radicand));
}

inline LocalClimate climate_unchecked(State s, double L, const Params& p) {
    LocalClimate c;
    c.A = albedo_unchecked(s, p);
    const double Te4 = p.flux_scale() * L * (1.0 - c.A);
    c.T_e = local_temperature(Te4);
    c.T_w = local_temperature(p.q * (c.A - p.A_w) + Te4);
    c.T_b = local_temperature(p.q * (c.A - p.A_b) + Te4);
    c.T_g = local_temperature(p.q * (c.A - p.A_g) + Te4);
    return c;
}

}  // namespace detail

/// Area-weighted albedo of white, black and bare surface.
[[nodiscard]] inline double planetary_albedo(State s, const Params& p) {
    detail::require_simplex(s, 0.0, "planetary_albedo");
    return detail::albedo_unchecked(s, p);
}

/// Emission temperature from radiative balance, then local temperatures
/// from T_i^4 = q (A - A_i) + T_e^4.
[[nodiscard]] inline LocalClimate climate(State s, double L, const Params& p) {
    if (!(L > 0.0)) throw DomainError("climate: luminosity must be positive");
    detail::require_simplex(s, kSimplexSlack, "climate");
    return detail::climate_unchecked(s, L, p);
}

/// Quadratic growth curve, zero outside T_opt +- 1/sqrt(k).
[[nodiscard]] inline double growth_rate(double T, const Params& p) {
    const double d = T - p.T_opt;
    if (std::abs(d) >= p.growth_half_width()) return 0.0;
    // max() guards the last ulp inside the window
    return std::max(0.0, 1.0 - p.k * d * d);
}

/// Vector field without the simplex check. Bare ground is clipped at zero.
/// Used by integrator stages and by backward-time manifold sweeps that run
/// slightly outside the physical region.
[[nodiscard]] inline State rhs_unchecked(State s, double L, const Params& p) {
    const LocalClimate c = detail::climate_unchecked(s, L, p);
    const double bare = std::max(s.alpha_g(), 0.0);
    return {s.alpha_w * (bare * growth_rate(c.T_w, p) - p.gamma),
            s.alpha_b * (bare * growth_rate(c.T_b, p) - p.gamma)};
}

/// d(alpha_w, alpha_b)/dt. Accepts states up to kSimplexSlack outside the simplex.
[[nodiscard]] inline State rhs(State s, double L, const Params& p) {
    if (!(L > 0.0)) throw DomainError("rhs: luminosity must be positive");
    detail::require_simplex(s, kSimplexSlack, "rhs");
    return rhs_unchecked(s, L, p);
}

/// True if any local temperature sits within `margin` kelvin of a growth
/// window edge, where the vector field is not differentiable.
[[nodiscard]] inline bool near_growth_cutoff(State s, double L, const Params& p, double margin = 0.5) {
    const LocalClimate c = detail::climate_unchecked(s, L, p);
    const double w = p.growth_half_width();
    for (double T : {c.T_w, c.T_b, c.T_g}) {
        if (std::abs(std::abs(T - p.T_opt) - w) < margin) return true;
    }
    return false;
}

}  // namespace daisyworld
