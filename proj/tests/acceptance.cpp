// Acceptance checks: one PASS/FAIL line per criterion, each with its measured
// value, tolerance and runtime budget. Exit status is non-zero if any check
// fails or overruns its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "daisyworld/daisyworld.hpp"

using namespace daisyworld;

namespace {

const Params P{};

struct Verdict {
    bool pass = false;
    std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void check(const std::string& name, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = v.pass && in_time;
    if (!ok) ++failures;
    std::printf("%s %s: %s [%.2f s of %.0f s%s]\n", ok ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs,
                budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
}

Equilibrium find(Label l, double L) {
    const auto e = equilibria::find_label(equilibria::enumerate_equilibria(L, P), l);
    if (!e) throw std::runtime_error(std::string(to_string(l)) + " missing at L = " + std::to_string(L));
    return *e;
}

Verdict fold_location() {
    const auto br = continuation::trace_branch(find(Label::e2, 1.4), 1.4, defaults::kLuminosityHi, P);
    if (br.folds.empty()) return {false, "no fold found on the white branch"};
    const double Lf = br.folds.front().L_fold;
    return {Lf >= 1.53 && Lf <= 1.57, fmt("L_fold = %.6f, required in [1.53, 1.57]", Lf)};
}

Verdict quasi_static_bound() {
    // the ramp ends past the coexistence range, where the white-only state
    // takes over: only the starting state is required to be coexistence
    tipping::ExperimentOptions o;
    o.require_coexistence = false;
    const double dL = tipping::critical_delta_L(defaults::kLmin, 1e-3, 0.5, 0.85, P, o, 1e-4);
    return {std::abs(dL - 0.75) <= 0.02, fmt("min tipping delta_L = %.5f at r = 1e-3, required 0.75 +- 0.02", dL)};
}

Verdict rate_induced() {
    const double dL = defaults::kDeltaL;
    const auto fast = tipping::run_experiment({defaults::kLmin, dL, 1.0}, P);
    const bool tips = fast.classification == tipping::Classification::tip;
    const double rc = tipping::critical_rate(defaults::kLmin, dL, 1e-2, 1e2, P);
    const bool ok = tips && dL < 0.7 && rc > 0.5 && rc < 1.0;
    return {ok, fmt("delta_L = %.2f: r = 1 ", dL) + (tips ? "tips" : "tracks") +
                    fmt(", r_c = %.6f; required r = 1 tips and r_c in (0.5, 1)", rc)};
}

Verdict asymptote() {
    using namespace defaults;
    tipping::DiagramOptions o;
    o.workers = 0;
    const auto d = tipping::tipping_diagram(kLmin, tipping::log_grid(kRateLo, kRateHi, kRateCount),
                                            tipping::linear_grid(kDeltaLLo, kDeltaLHi, kDeltaLCount), P, o);
    const double at_fast = d.critical_delta_L.back();
    const double L_BI = geometry::find_L_BI(tipping::stable_coexistence(kLmin, P), kLmin, kLmax, P, 1e-6);
    const double gap = std::abs(at_fast - (L_BI - kLmin));
    return {std::isfinite(at_fast) && gap < 1e-3,
            fmt("critical delta_L at r = 100: %.6f, L_BI - L_min = %.6f, |diff| = %.2e < 1e-3", at_fast,
                L_BI - kLmin, gap)};
}

/// Ends of the luminosity interval on which the coexistence state lies in
/// the simplex, by bisection on its existence.
std::pair<double, double> coexistence_range() {
    auto exists = [](double L) { return equilibria::coexistence_analytic(L, P).has_value(); };
    double lo = 0.5, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (lo + hi);
        (exists(m) ? hi : lo) = m;
    }
    const double L_lo = hi;
    lo = 1.0;
    hi = 1.7;
    for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (lo + hi);
        (exists(m) ? lo : hi) = m;
    }
    return {L_lo, lo};
}

Verdict coexistence_identities() {
    const auto ct = equilibria::coexistence_temperatures(P);
    const auto [L_lo, L_hi] = coexistence_range();
    double worst_sum = 0.0, worst_cover = 0.0, worst_tb = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double L = L_lo + (L_hi - L_lo) * (i + 0.5) / 20.0;
        const auto e5 = equilibria::coexistence_analytic(L, P);
        if (!e5) return {false, fmt("no coexistence state at L = %.6f", L)};
        const auto c = climate(e5->state, L, P);
        worst_sum = std::max(worst_sum, std::abs(c.T_w + c.T_b - 2.0 * P.T_opt));
        worst_cover = std::max(worst_cover, std::abs(e5->state.alpha_g() - P.gamma / growth_rate(c.T_b, P)));
        worst_tb = std::max(worst_tb, std::abs(c.T_b - ct.T_b));
    }
    return {worst_sum < 1e-6 && worst_cover < 1e-9 && worst_tb < 1e-6,
            fmt("max |T_w+T_b-2T_opt| = %.1e K, max |alpha_g-gamma/beta| = %.1e, max T_b drift = %.1e K", worst_sum,
                worst_cover, worst_tb)};
}

Verdict flux_identity() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0), lum(0.6, 1.6);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double a = u(rng), b = u(rng);
        if (a + b > 1.0) {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        const State s{a, b};
        const auto c = climate(s, lum(rng), P);
        const double te4 = std::pow(c.T_e, 4);
        const double sum = a * std::pow(c.T_w, 4) + b * std::pow(c.T_b, 4) + s.alpha_g() * std::pow(c.T_g, 4);
        worst = std::max(worst, std::abs(sum - te4) / (std::numeric_limits<double>::epsilon() * te4));
    }
    return {worst <= 10.0, fmt("worst relative residual = %.2f ulps at 1e4 states, required <= 10", worst)};
}

Verdict manifold_basin_duality() {
    const double L = defaults::kLmax;
    const int res = defaults::kBasinResolution;
    const auto curve = geometry::stable_manifold(find(Label::e1, L), P);
    const auto grid = geometry::basin_grid(L, res, P, {.workers = 0});
    const double diag = std::sqrt(2.0) * grid.cell_width();

    // every edge between two valid cells of different class lies within a
    // cell diagonal of the manifold
    double worst_edge = 0.0;
    std::vector<State> edges;
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            const int c = grid.at(i, j);
            if (c < 0) continue;
            for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
                if (i + di >= res || j + dj >= res) continue;
                const int n = grid.at(i + di, j + dj);
                if (n < 0 || n == c) continue;
                const State mid = 0.5 * (grid.center(i, j) + grid.center(i + di, j + dj));
                edges.push_back(mid);
                worst_edge = std::max(worst_edge, geometry::distance_to_curve(curve, mid));
            }
        }
    }
    // every manifold point inside the grid's valid region lies within a cell
    // diagonal of such an edge
    double worst_curve = 0.0;
    for (const State& s : curve.points) {
        if (!in_simplex(s) || s.alpha_w + s.alpha_b > 1.0 - grid.cell_width() || s.alpha_b < grid.cell_width() ||
            s.alpha_w < grid.cell_width()) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const State& e : edges) best = std::min(best, distance(e, s));
        worst_curve = std::max(worst_curve, best);
    }
    return {!edges.empty() && worst_edge <= diag && worst_curve <= diag && grid.unresolved == 0,
            fmt("L = %.2f, %zu boundary edges: max edge-to-curve %.2e, max curve-to-edge %.2e, cell diagonal %.2e",
                L, edges.size(), worst_edge, worst_curve, diag)};
}

Verdict saddle_approach() {
    using namespace defaults;
    const double rc = tipping::critical_rate(kLmin, kDeltaL, 1e-2, 1e2, P);
    const State e1 = find(Label::e1, kLmax).state;
    double worst = 0.0;
    for (double f : {1.0 - 1e-3, 1.0 + 1e-3}) {
        const auto out = tipping::run_experiment({kLmin, kDeltaL, rc * f}, P);
        worst = std::max(worst, tipping::min_distance(out.trajectory, e1));
    }
    return {worst < 1e-2, fmt("r_c = %.6f; closest approach to e1(L_max) at r_c(1 +- 1e-3) = %.2e, required < 1e-2",
                              rc, worst)};
}

Verdict regulation() {
    const auto [L_lo, L_hi] = coexistence_range();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i <= 10000; ++i) {
        const double L = L_lo + (L_hi - L_lo) * i / 10000.0;
        const auto e5 = equilibria::coexistence_analytic(L, P);
        if (!e5) return {false, fmt("no coexistence state at L = %.6f", L)};
        lo = std::min(lo, e5->T_e);
        hi = std::max(hi, e5->T_e);
    }
    const double e0_span = climate({0.0, 0.0}, 1.6, P).T_e - climate({0.0, 0.0}, 0.6, P).T_e;
    const double analytic = std::pow(P.S * 1.6 * (1.0 - P.A_g) / P.sigma, 0.25) -
                            std::pow(P.S * 0.6 * (1.0 - P.A_g) / P.sigma, 0.25);
    return {hi - lo < 5.0 && e0_span > 50.0 && std::abs(e0_span - analytic) < 1e-9,
            fmt("e5 T_e span over L in [%.4f, %.4f] = %.3f K, required < 5; e0 T_e span over [0.6, 1.6] = %.3f K, "
                "required > 50",
                L_lo, L_hi, hi - lo, e0_span)};
}

}  // namespace

int main() {
    check("fold-location", 10, fold_location);
    check("quasi-static-bound", 120, quasi_static_bound);
    check("rate-induced-tipping", 120, rate_induced);
    check("basin-instability-asymptote", 600, asymptote);
    check("coexistence-identities", 5, coexistence_identities);
    check("flux-identity", 1, flux_identity);
    check("manifold-basin-duality", 300, manifold_basin_duality);
    check("critical-rate-saddle-approach", 60, saddle_approach);
    check("regulation", 5, regulation);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
