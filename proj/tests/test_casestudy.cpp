#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pavg/casestudy.hpp"
#include "pavg/zeros.hpp"

using namespace pavg;

namespace {

constexpr double kPi = std::numbers::pi;

double eval_order(const Problem& p, int j, double t, double r) {
    Vec out(1);
    p.field.eval_order(j, t, Vec{r}, out);
    return out[0];
}

double eval_full(const Problem& p, double t, double r, double eps) {
    Vec out(1);
    p.field.eval_full(t, Vec{r}, eps, out);
    return out[0];
}

std::vector<double> radii(int count, double lo, double hi) {
    std::vector<double> r;
    for (int i = 0; i < count; ++i) r.push_back(lo + (hi - lo) * i / (count - 1));
    return r;
}

}  // namespace

TEST(Oscillator, FirstOrderAtQuarterTurn) {
    const auto p = build_oscillator_problem({});
    EXPECT_EQ(p.field.order(), 1);
    EXPECT_NEAR(eval_order(p, 1, kPi / 2, 2.0), 6.8844991406148168, 1e-14);
}

TEST(Oscillator, ProblemShape) {
    OscillatorConfig cfg;
    cfg.alpha = 0.3;
    cfg.k = 3;
    const auto p = build_oscillator_problem(cfg);
    EXPECT_EQ(p.field.dimension(), 1);
    EXPECT_EQ(p.field.order(), 3);
    EXPECT_DOUBLE_EQ(p.field.period(), 2 * kPi);
    const auto& box = std::get<Box>(p.domain);
    EXPECT_DOUBLE_EQ(box.lower[0], 0.7);
    EXPECT_DOUBLE_EQ(box.upper[0], 1.3);
    EXPECT_DOUBLE_EQ(p.eps_max, 0.05);
    EXPECT_EQ(p.eps_grid, cfg.eps_grid);
}

TEST(Oscillator, LowerOrdersMatchTheFormula) {
    OscillatorConfig cfg;
    cfg.k = 4;
    const auto p = build_oscillator_problem(cfg);
    for (double t : {0.3, 1.7, 4.0})
        for (double r : {0.6, 1.0, 1.45}) {
            for (int i = 1; i < 4; ++i)
                EXPECT_NEAR(eval_order(p, i, t, r), std::pow(r, i + 1) * std::pow(std::cos(t), i - 1) * std::sin(t),
                            1e-14);
            const double fk = r * (std::pow(r, 4) * std::pow(std::cos(t), 3) + std::cbrt(r * r - 1) * std::sin(t)) *
                              std::sin(t);
            EXPECT_NEAR(eval_order(p, 4, t, r), fk, 1e-13);
        }
}

TEST(Oscillator, ZeroPerturbationGivesZeroRemainder) {
    OscillatorConfig cfg;
    cfg.k = 2;
    const auto p = build_oscillator_problem(cfg);
    EXPECT_TRUE(p.field.remainder_is_zero());
    Vec out(1);
    p.field.eval_remainder(1.0, Vec{1.2}, 0.01, out);
    EXPECT_EQ(out[0], 0.0);
}

TEST(Oscillator, CubeRootTermVanishesOnTheCircle) {
    for (int k = 1; k <= 4; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto p = build_oscillator_problem(cfg);
        for (double t : {0.4, 2.2, 5.0}) {
            const double expected = std::pow(std::cos(t), k - 1) * std::sin(t);
            EXPECT_NEAR(eval_order(p, k, t, 1.0), expected, 1e-15) << k;
        }
    }
}

TEST(Oscillator, TruncatedRemainderCarriesE) {
    OscillatorConfig cfg;
    cfg.k = 2;
    cfg.E = parse("x1 + 2 * x2 + eps");
    const auto p = build_oscillator_problem(cfg);
    Vec out(1);
    const double t = 0.8, r = 1.1, eps = 0.03;
    p.field.eval_remainder(t, Vec{r}, eps, out);
    const double E = r * std::cos(t) - 2 * r * std::sin(t) + eps;
    EXPECT_NEAR(out[0], -E * std::sin(t), 1e-14);
}

TEST(Oscillator, ExactModeIsFirstOrderOnly) {
    OscillatorConfig cfg;
    cfg.remainder = RemainderMode::Exact;
    EXPECT_NO_THROW(build_oscillator_problem(cfg));
    cfg.k = 2;
    EXPECT_THROW(build_oscillator_problem(cfg), std::invalid_argument);
}

TEST(Oscillator, ConfigValidation) {
    OscillatorConfig cfg;
    cfg.alpha = 1.0;
    EXPECT_THROW(build_oscillator_problem(cfg), std::invalid_argument);
    cfg = {};
    cfg.k = 0;
    EXPECT_THROW(build_oscillator_problem(cfg), std::invalid_argument);
    cfg = {};
    cfg.E = parse("t * x1");
    EXPECT_THROW(build_oscillator_problem(cfg), std::invalid_argument);
    cfg = {};
    cfg.eps_grid = {0.01, 0.02};
    EXPECT_THROW(build_oscillator_problem(cfg), std::invalid_argument);
}

TEST(Oscillator, NegativeEpsFlagMirrorsTheField) {
    // eps F(eps) at eps = -d equals d G(d).
    for (int k = 1; k <= 3; ++k)
        for (auto mode : {RemainderMode::Truncated, RemainderMode::Exact}) {
            if (mode == RemainderMode::Exact && k > 1) continue;
            OscillatorConfig cfg;
            cfg.k = k;
            cfg.remainder = mode;
            cfg.E = parse("x1 * x2 + 3 * eps + x2");
            auto neg = cfg;
            neg.negative_eps = true;
            const auto p = build_oscillator_problem(cfg), q = build_oscillator_problem(neg);
            for (double d : {0.01, 0.04})
                for (double t : {0.5, 2.5, 4.5})
                    for (double r : {0.7, 1.05, 1.3})
                        EXPECT_NEAR(d * eval_full(q, t, r, d), -d * eval_full(p, t, r, -d), 1e-14)
                            << k << " " << t << " " << r;
        }
}

TEST(ClosedForm, Values) {
    EXPECT_EQ(fk_closed_form(1.0), 0.0);
    EXPECT_NEAR(fk_closed_form(2.0), 1.4422495703074083, 1e-15);
    EXPECT_NEAR(fk_closed_form(0.5), -0.22714007410401746, 1e-16);
    EXPECT_NEAR(fk_closed_form(1.5), 0.8079130087619564, 1e-15);
}

TEST(ClosedForm, SingleSignChangeAtOne) {
    int changes = 0;
    double prev = fk_closed_form(1e-3), where = 0;
    for (int i = 1; i <= 20000; ++i) {
        const double r = 1e-3 + (2.0 - 2e-3) * i / 20000.0;
        const double v = fk_closed_form(r);
        if ((v > 0) != (prev > 0) && v != 0.0) {
            ++changes;
            where = r;
        }
        prev = v;
    }
    EXPECT_EQ(changes, 1);
    EXPECT_NEAR(where, 1.0, 1e-3);
}

TEST(ClosedForm, AveragedTopOrderMatches) {
    for (int k = 1; k <= 3; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto p = build_oscillator_problem(cfg);
        for (double r : radii(50, 0.6, 1.4)) {
            EXPECT_NEAR(average_order_j(p.field, k, Vec{r}).value[0], fk_closed_form(r), 1e-8) << k << " " << r;
            for (int j = 1; j < k; ++j) EXPECT_LT(std::abs(average_order_j(p.field, j, Vec{r}).value[0]), 1e-9);
        }
    }
}

TEST(ClosedForm, LeadingOrderIsK) {
    for (int k = 1; k <= 3; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto p = build_oscillator_problem(cfg);
        std::vector<Vec> grid;
        for (double r : radii(11, 0.5, 1.5)) grid.push_back({r});
        EXPECT_EQ(detect_leading_order(p.field, grid), k);
    }
}

TEST(Zeros, OscillatorHasOneCertifiedZeroAtTheCircle) {
    const auto p = build_oscillator_problem({});
    const auto rep = locate_zeros(p.field, p.domain);
    EXPECT_EQ(rep.order, 1);
    ASSERT_EQ(rep.zeros.size(), 1u);
    const auto& z = rep.zeros.front();
    EXPECT_TRUE(z.certified);
    ASSERT_TRUE(z.degree);
    EXPECT_EQ(*z.degree, 1);
    EXPECT_LE(z.box.lower[0], 1.0);
    EXPECT_GE(z.box.upper[0], 1.0);
    EXPECT_NEAR(z.estimate[0], 1.0, 2e-3);
}

TEST(Zeros, PlanarPairWithOppositeIndices) {
    // (x^2 - 1/4, y): zeros at (+-1/2, 0) with indices +1 and -1.
    const VectorFieldExpansion f(2, 1.0, {{parse("x1^2 - 0.25 + 0*t"), parse("x2")}});
    ZerosOptions opt;
    opt.depth = 8;
    const auto rep = locate_zeros(f, Box{{-1.03, -1.01}, {1.02, 1.04}}, opt);
    ASSERT_EQ(rep.zeros.size(), 2u);
    int sum = 0;
    for (const auto& z : rep.zeros) {
        ASSERT_TRUE(z.certified);
        EXPECT_NEAR(std::abs(z.estimate[0]), 0.5, 0.1);
        EXPECT_EQ(*z.degree, z.estimate[0] > 0 ? 1 : -1);
        sum += *z.degree;
    }
    EXPECT_EQ(sum, 0);
}

TEST(OrbitTable, RowsForTheFirstOrderOscillator) {
    OscillatorConfig cfg;
    cfg.eps_grid = {0.05, 0.01};
    const auto table = reproduce_proposition(cfg);
    ASSERT_EQ(table.rows.size(), 2u);
    for (const auto& row : table.rows) {
        SCOPED_TRACE(row.eps);
        EXPECT_EQ(row.orbit_status, "certified");
        EXPECT_LT(row.residual, kDefaultResidualTol);
        ASSERT_TRUE(row.degree);
        EXPECT_EQ(*row.degree, 1);
        ASSERT_TRUE(row.averaged_degree);
        EXPECT_EQ(*row.averaged_degree, 1);
        EXPECT_EQ(row.h_status, "no counterexample at this resolution");
        EXPECT_EQ(row.margin_verdict, "pass");
        EXPECT_LE(row.orbit_radius_max_dev, 0.05);
    }
    EXPECT_LT(table.rows[1].orbit_radius_max_dev, table.rows[0].orbit_radius_max_dev);
    EXPECT_LT(table.rows[0].inf_boundary, table.rows[1].inf_boundary);
}

TEST(OrbitTable, EmptyGridGivesNoRows) {
    OscillatorConfig cfg;
    cfg.eps_grid.clear();
    EXPECT_TRUE(reproduce_proposition(cfg).rows.empty());
}
