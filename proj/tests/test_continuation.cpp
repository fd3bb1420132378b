#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "daisyworld/continuation.hpp"
#include "daisyworld/equilibria.hpp"
#include "oracle_values.hpp"

using namespace daisyworld;
using namespace daisyworld::continuation;

namespace {

const Params P{};

Equilibrium start(Label l, double L) {
    const auto e = equilibria::find_label(equilibria::enumerate_equilibria(L, P), l);
    if (!e) throw std::runtime_error("missing start equilibrium");
    return *e;
}

Eigen::Vector3d point3(const Equilibrium& e) { return {e.state.alpha_w, e.state.alpha_b, e.L}; }

/// Distance from y to the C1 curve through the branch points that uses the
/// stored unit tangents as cubic Hermite end slopes (scaled by chord length).
double hermite_distance(const Branch& br, const Eigen::Vector3d& y) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
        const Eigen::Vector3d p0 = point3(br.points[i]), p1 = point3(br.points[i + 1]);
        const double h = (p1 - p0).norm();
        if ((p0 - y).norm() > 2.0 * h + best && (p1 - y).norm() > 2.0 * h + best) continue;
        const Eigen::Vector3d m0 = h * br.tangents[i], m1 = h * br.tangents[i + 1];
        auto curve = [&](double s) {
            const double s2 = s * s, s3 = s2 * s;
            return ((2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1)
                .eval();
        };
        // coarse scan then golden-section refinement on the best bracket
        constexpr int n = 32;
        int k_best = 0;
        double d_best = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= n; ++k) {
            const double d = (curve(double(k) / n) - y).norm();
            if (d < d_best) d_best = d, k_best = k;
        }
        double a = std::max(0.0, (k_best - 1.0) / n), b = std::min(1.0, (k_best + 1.0) / n);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 60; ++it) {
            const double c = b - g * (b - a), d = a + g * (b - a);
            if ((curve(c) - y).norm() < (curve(d) - y).norm()) {
                b = d;
            } else {
                a = c;
            }
        }
        best = std::min({best, d_best, (curve(0.5 * (a + b)) - y).norm()});
    }
    return best;
}

}  // namespace

TEST(Continuation, CoexistenceBranchKeepsConstantCover) {
    const Branch br = trace_both_ways(start(Label::e5, 1.0), 0.5, 1.7, P);
    ASSERT_GT(br.points.size(), 10u);
    EXPECT_EQ(br.label, "coexistence");
    EXPECT_TRUE(br.folds.empty());
    double prev_L = -1.0, prev_w = -1.0;
    for (const auto& e : br.points) {
        EXPECT_NEAR(e.state.alpha_w + e.state.alpha_b, oracle::kCoexCover, 1e-9);
        EXPECT_GT(e.L, prev_L);
        EXPECT_GT(e.state.alpha_w, prev_w);
        prev_L = e.L;
        prev_w = e.state.alpha_w;
    }
    EXPECT_NEAR(br.points.front().L, oracle::kE5Lo, 1e-4);
    EXPECT_NEAR(br.points.back().L, oracle::kE5Hi, 1e-4);
}

TEST(Continuation, WhiteBranchHasOneFold) {
    const Branch br = trace_both_ways(start(Label::e2, 1.4), 0.5, 1.7, P);
    EXPECT_EQ(br.label, "white");
    ASSERT_EQ(br.folds.size(), 1u);
    EXPECT_NEAR(br.folds[0].L_fold, oracle::kWhiteFold, 1e-6);
    EXPECT_GE(br.folds[0].L_fold, 1.53);
    EXPECT_LE(br.folds[0].L_fold, 1.57);
    EXPECT_TRUE(br.folds[0].eigen_confirmed);
    for (const auto& e : br.points) EXPECT_LE(e.L, br.folds[0].L_fold + 1e-9);
}

TEST(Continuation, BlackBranchHasOneFoldBelowItsStartingLuminosity) {
    const Branch br = trace_both_ways(start(Label::e4, 0.68), 0.5, 1.7, P);
    EXPECT_EQ(br.label, "black");
    ASSERT_EQ(br.folds.size(), 1u);
    EXPECT_NEAR(br.folds[0].L_fold, oracle::kBlackFold, 1e-6);
    EXPECT_LT(br.folds[0].L_fold, 0.68);
    for (const auto& e : br.points) EXPECT_GE(e.L, br.folds[0].L_fold - 1e-9);
}

TEST(Continuation, DeadBranchSpansTheRangeWithoutFolds) {
    const Branch br = trace_both_ways(start(Label::e0, 1.0), 0.5, 1.7, P);
    EXPECT_EQ(br.label, "dead");
    EXPECT_TRUE(br.folds.empty());
    EXPECT_NEAR(br.points.front().L, 0.5, 1e-12);
    EXPECT_NEAR(br.points.back().L, 1.7, 1e-12);
    for (const auto& e : br.points) EXPECT_EQ(e.state, (State{0.0, 0.0}));
}

TEST(Continuation, EveryPointIsAnEquilibrium) {
    for (const auto& [l, L] : {std::pair{Label::e2, 1.4}, std::pair{Label::e4, 0.68}, std::pair{Label::e5, 1.0}}) {
        const Branch br = trace_both_ways(start(l, L), 0.5, 1.7, P);
        EXPECT_FALSE(br.truncated);
        for (const auto& e : br.points) ASSERT_LT(norm_inf(rhs(e.state, e.L, P)), 1e-10) << e.L;
    }
}

TEST(Continuation, StabilityFlipsAcrossTheFold) {
    const Branch br = trace_both_ways(start(Label::e2, 1.4), 0.5, 1.7, P);
    ASSERT_EQ(br.folds.size(), 1u);
    const double Lf = br.folds[0].L_fold;
    // the point whose tangent L-component changes sign brackets the fold
    std::size_t k = 0;
    for (; k + 1 < br.tangents.size(); ++k) {
        if ((br.tangents[k](2) > 0.0) != (br.tangents[k + 1](2) > 0.0)) break;
    }
    ASSERT_LT(k + 1, br.points.size());
    const auto& upper = br.points[k - 1];
    const auto& lower = br.points[k + 2];
    EXPECT_LT(Lf - upper.L, 0.1);
    EXPECT_NE(upper.is_stable(), lower.is_stable());
    EXPECT_GT(upper.state.alpha_w, lower.state.alpha_w);
    EXPECT_TRUE(upper.is_stable());
    EXPECT_EQ(lower.stability, Stability::saddle);
}

TEST(Continuation, AgreesWithDirectEnumeration) {
    for (const auto& [l, L] : {std::pair{Label::e2, 1.4}, std::pair{Label::e4, 0.68}, std::pair{Label::e5, 1.0}}) {
        const Branch br = trace_both_ways(start(l, L), 0.5, 1.7, P);
        const std::size_t n = br.points.size();
        for (int k = 0; k < 20; ++k) {
            const auto& e = br.points[(n - 1) * (2 * k + 1) / 40];
            if (e.marginal) continue;
            const auto eqs = equilibria::enumerate_equilibria(e.L, P);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : eqs) best = std::min(best, distance(c.state, e.state));
            EXPECT_LT(best, 1e-8) << to_string(e.label) << " at L = " << e.L;
            const auto same = equilibria::find_label(eqs, e.label);
            ASSERT_TRUE(same.has_value());
            EXPECT_LT(distance(same->state, e.state), 1e-8);
        }
    }
}

TEST(Continuation, ReversedTraceFollowsTheSameCurve) {
    // steps fine enough that the interpolant itself is accurate to well below
    // the tolerance near the fold, where curvature is largest
    ContinuationOptions o;
    o.ds_max = 5e-3;
    const Branch fwd = trace_branch(start(Label::e2, 1.4), 0.5, 1.7, P, o);
    ASSERT_GT(fwd.points.size(), 4u);
    // restart from the far end (past the fold, on the saddle half) and walk back
    const Equilibrium& far = fwd.points[fwd.points.size() - 2];
    ASSERT_EQ(far.label, Label::e1);
    o.direction = +1;
    const Branch back = trace_branch(far, 0.5, 1.7, P, o);

    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < fwd.points.size(); ++i) {
        worst = std::max(worst, hermite_distance(back, point3(fwd.points[i])));
    }
    for (const auto& e : back.points) {
        if (e.label == Label::e2 && e.L < 1.4) continue;
        worst = std::max(worst, hermite_distance(fwd, point3(e)));
    }
    EXPECT_LT(worst, 1e-6);
    ASSERT_EQ(back.folds.size(), 1u);
    EXPECT_NEAR(back.folds[0].L_fold, fwd.folds.at(0).L_fold, 1e-8);
}

TEST(Continuation, RejectsBadInput) {
    const auto e5 = start(Label::e5, 1.0);
    EXPECT_THROW((void)continue_branch(e5, 1.2, 1.1, P), ConfigError);
    EXPECT_THROW((void)continue_branch(e5, 1.1, 1.3, P), ConfigError);
    Equilibrium off = e5;
    off.state.alpha_w += 1e-3;
    EXPECT_THROW((void)continue_branch(off, 0.5, 1.7, P), DomainError);
}

TEST(QuasistaticRamp, WhiteCollapsesPastItsFold) {
    const auto out = quasistatic_ramp(start(Label::e2, 1.4), 1.6, P);
    ASSERT_TRUE(out.final_attractor.has_value());
    EXPECT_TRUE(out.collapsed);
    // the state hugs the stable branch until the fold, then falls
    const auto& L = out.trajectory.forcing_values;
    for (std::size_t i = 0; i < L.size(); i += 50) {
        if (L[i] >= 1.5) continue;
        const auto e2 = equilibria::find_label(equilibria::enumerate_equilibria(L[i], P), Label::e2);
        ASSERT_TRUE(e2.has_value());
        EXPECT_LT(distance(out.trajectory.states[i], e2->state), 1e-2) << L[i];
    }
}

TEST(QuasistaticRamp, BlackCollapsesPastItsFold) {
    const auto out = quasistatic_ramp(start(Label::e4, 0.68), 0.6, P);
    ASSERT_TRUE(out.final_attractor.has_value());
    EXPECT_TRUE(out.collapsed);
}

TEST(QuasistaticRamp, CoexistenceTracksWithinItsRange) {
    const auto out = quasistatic_ramp(start(Label::e5, 1.0), 1.2, P);
    ASSERT_TRUE(out.final_attractor.has_value());
    EXPECT_EQ(*out.final_attractor, Label::e5);
    EXPECT_FALSE(out.collapsed);
    const auto e5 = *equilibria::coexistence_analytic(1.2, P);
    EXPECT_LT(distance(out.trajectory.back(), e5.state), 1e-6);
}
