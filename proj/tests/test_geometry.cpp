#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "daisyworld/equilibria.hpp"
#include "daisyworld/geometry.hpp"
#include "oracle_values.hpp"

using namespace daisyworld;
using namespace daisyworld::geometry;

namespace {

const Params P{};

Equilibrium at(Label l, double L) {
    const auto e = equilibria::find_label(equilibria::enumerate_equilibria(L, P), l);
    if (!e) throw std::runtime_error("missing equilibrium");
    return *e;
}

std::optional<Label> attractor_from(State x, double L) {
    return solver::converge_to_attractor(x, L, equilibria::enumerate_equilibria(L, P), {}, P).attractor;
}

/// Random simplex points at least `margin` away from the curve; checks that
/// the origin side runs to the dead planet and the other side to `alive`.
void expect_separation(const ManifoldCurve& c, Label alive, double margin, int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < samples) {
        const State x{u(rng), u(rng)};
        if (!in_simplex(x) || distance_to_curve(c, x) < margin) continue;
        const auto a = attractor_from(x, c.L);
        ASSERT_TRUE(a.has_value());
        const Label expected = signed_side(c, x) > 0.0 ? Label::e0 : alive;
        EXPECT_EQ(*a, expected) << "(" << x.alpha_w << ", " << x.alpha_b << ") at L = " << c.L;
        ++checked;
    }
}

}  // namespace

TEST(StableManifold, RefusesNonSaddles) {
    EXPECT_THROW((void)stable_manifold(at(Label::e5, 1.0), P), DomainError);
    EXPECT_THROW((void)stable_manifold(at(Label::e0, 1.2), P), DomainError);
}

TEST(StableManifold, PassesThroughTheSaddleAndStaysInTheBox) {
    const auto c = stable_manifold(at(Label::e1, 1.2), P);
    ASSERT_GT(c.points.size(), 10u);
    ASSERT_LT(c.saddle_index, c.points.size());
    EXPECT_EQ(c.points[c.saddle_index], c.saddle.state);
    const Box box;
    for (const State& s : c.points) EXPECT_TRUE(box.contains(s));
}

TEST(StableManifold, ForwardFlowFromTheCurveApproachesTheSaddle) {
    const auto c = stable_manifold(at(Label::e1, 1.4), P);
    // nearest curve point inside the simplex at least 0.1 away from the saddle
    std::optional<State> x0;
    for (const State& s : c.points) {
        const double d = distance(s, c.saddle.state);
        if (in_simplex(s) && d > 0.1 && (!x0 || d < distance(*x0, c.saddle.state))) x0 = s;
    }
    ASSERT_TRUE(x0.has_value());
    const auto tr = solver::integrate_autonomous(*x0, c.L, {0.0, 200.0}, {}, P);
    double closest = 1.0;
    for (const State& s : tr.states) closest = std::min(closest, distance(s, c.saddle.state));
    EXPECT_LT(closest, 1e-3);
}

TEST(StableManifold, WhiteSaddleSeparatesBasinsAtHighLuminosity) {
    const auto c = stable_manifold(at(Label::e1, 1.4), P);
    expect_separation(c, Label::e2, 0.01, 60, 1);
}

TEST(StableManifold, WhiteSaddleSeparatesBasinsWhereCoexistenceHolds) {
    const auto c = stable_manifold(at(Label::e1, 1.2), P);
    expect_separation(c, Label::e5, 0.01, 60, 2);
}

TEST(StableManifold, BlackSaddleSeparatesBasinsAtLowLuminosity) {
    const auto c = stable_manifold(at(Label::e3, 0.7), P);
    expect_separation(c, Label::e4, 0.01, 60, 3);
}

TEST(SignedSide, OriginSideIsPositive) {
    const auto c = stable_manifold(at(Label::e1, 1.2), P);
    EXPECT_GT(signed_side(c, {1e-3, 1e-3}), 0.0);
    EXPECT_LT(signed_side(c, at(Label::e5, 1.2).state), 0.0);
    EXPECT_NEAR(signed_side(c, c.saddle.state), 0.0, 1e-15);
}

TEST(BasinGrid, EverythingDiesPastTheWhiteFold) {
    const auto g = basin_grid(1.58, 21, P);
    ASSERT_EQ(g.attractors.size(), 1u);
    for (int c : g.classes) {
        if (c != kInvalidCell) {
            EXPECT_EQ(c, static_cast<int>(Label::e0));
        }
    }
    EXPECT_DOUBLE_EQ(g.area_fraction(Label::e0), 1.0);
}

TEST(BasinGrid, CellsOutsideTheSimplexAreInvalid) {
    const auto g = basin_grid(1.0, 11, P);
    EXPECT_EQ(g.at(10, 10), kInvalidCell);
    EXPECT_NE(g.at(0, 0), kInvalidCell);
    const auto e5 = at(Label::e5, 1.0);
    const auto [i, j] = g.cell_of(e5.state);
    EXPECT_EQ(g.at(i, j), static_cast<int>(Label::e5));
}

TEST(BasinGrid, AreaConvergesUnderRefinement) {
    const auto coarse = basin_grid(1.2, 51, P, {.workers = 0});
    const auto fine = basin_grid(1.2, 101, P, {.workers = 0});
    EXPECT_LT(std::abs(coarse.area_fraction(Label::e0) - fine.area_fraction(Label::e0)), 0.02);
    EXPECT_LT(std::abs(coarse.area_fraction(Label::e5) - fine.area_fraction(Label::e5)), 0.02);
    EXPECT_EQ(fine.unresolved, 0u);
}

TEST(BasinGrid, IndependentOfWorkerCount) {
    const auto a = basin_grid(1.2, 41, P, {.workers = 1});
    const auto b = basin_grid(1.2, 41, P, {.workers = 4});
    EXPECT_EQ(a.classes, b.classes);
}

TEST(BasinGrid, CellClassMatchesPointsInsideTheCell) {
    const int res = 401;
    const auto c = stable_manifold(at(Label::e1, 1.2), P);
    const auto known = equilibria::enumerate_equilibria(1.2, P);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 50) {
        const State x{u(rng), u(rng)};
        if (!in_simplex(x) || distance_to_curve(c, x) < 2.0 / res) continue;
        const int i = static_cast<int>(x.alpha_w * res), j = static_cast<int>(x.alpha_b * res);
        const int cls = classify_cell(1.2, res, i, j, known, P);
        if (cls == kInvalidCell) continue;
        const auto a = attractor_from(x, 1.2);
        ASSERT_TRUE(a.has_value());
        EXPECT_EQ(cls, static_cast<int>(*a));
        ++checked;
    }
}

TEST(BasinGrid, RejectsBadInput) {
    EXPECT_THROW((void)basin_grid(1.2, 1, P), ConfigError);
}

TEST(BasinInstability, ExamplesAroundTheThreshold) {
    const auto e5 = at(Label::e5, 0.8);
    EXPECT_FALSE(is_basin_unstable(e5, 0.8, P));
    EXPECT_FALSE(is_basin_unstable(e5, 0.85, P));
    EXPECT_FALSE(is_basin_unstable(e5, oracle::kLBI - 0.01, P));
    EXPECT_TRUE(is_basin_unstable(e5, oracle::kLBI + 0.01, P));
    EXPECT_TRUE(is_basin_unstable(e5, 1.55, P));
}

TEST(BasinInstability, BisectionFindsTheThreshold) {
    const auto e5 = at(Label::e5, 0.8);
    const double L_BI = find_L_BI(e5, 0.8, 1.55, P);
    EXPECT_NEAR(L_BI, oracle::kLBI, 1e-3);
    EXPECT_FALSE(is_basin_unstable(e5, L_BI - 1e-3, P));
    EXPECT_TRUE(is_basin_unstable(e5, L_BI + 1e-3, P));
}

TEST(BasinInstability, ThresholdIsWhereTheSeparatrixCrossesTheState) {
    const auto e5 = at(Label::e5, 0.8);
    const double L_BI = find_L_BI(e5, 0.8, 1.55, P, 1e-6);
    // the white saddle only exists from about 1.1942 upward, just below L_BI
    const auto below = stable_manifold(at(Label::e1, L_BI - 1e-3), P);
    const auto above = stable_manifold(at(Label::e1, L_BI + 1e-3), P);
    EXPECT_LT(signed_side(below, e5.state), 0.0);
    EXPECT_GT(signed_side(above, e5.state), 0.0);
    const auto on = stable_manifold(at(Label::e1, L_BI), P);
    EXPECT_LT(distance_to_curve(on, e5.state), 1.0 / 201.0);
}

TEST(BasinInstability, InvalidBracketsAreReported) {
    const auto e5 = at(Label::e5, 0.8);
    EXPECT_THROW((void)find_L_BI(e5, 1.3, 1.5, P), BracketError);
    EXPECT_THROW((void)find_L_BI(e5, 0.8, 1.0, P), BracketError);
    EXPECT_THROW((void)find_L_BI(e5, 1.0, 0.9, P), BracketError);
}
