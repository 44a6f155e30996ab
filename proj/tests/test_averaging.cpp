#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pavg/averaging.hpp"
#include "pavg/casestudy.hpp"

using namespace pavg;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

VectorFieldExpansion scalar(std::vector<std::string> F, std::string R = "0", double T = kTwoPi) {
    std::vector<std::vector<Expression>> f;
    for (const auto& s : F) f.push_back({parse(s)});
    return VectorFieldExpansion(1, T, std::move(f), {parse(R)});
}

}  // namespace

TEST(AverageOrder, SpecExamples) {
    const auto f = scalar({"cos(t)", "x1 + sin(t)^2"});
    EXPECT_NEAR(average_order_j(f, 1, Vec{3.0}).value[0], 0.0, 1e-10);
    EXPECT_NEAR(average_order_j(f, 2, Vec{1.0}).value[0], 1.5, 1e-10);
    const auto rep = average_order_j(f, 2, Vec{1.0});
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.nodes_used % 64, 0);
    EXPECT_LT(rep.est_error, 1e-10);
}

TEST(AverageOrder, NonSmoothIntegrandConverges) {
    // mean of |sin t| is 2/pi
    const auto f = scalar({"abs(sin(t))"});
    const auto rep = average_order_j(f, 1, Vec{0.0}, 1e-9);
    EXPECT_TRUE(rep.converged);
    EXPECT_NEAR(rep.value[0], 2 / std::numbers::pi, 1e-8);
}

TEST(AverageOrder, NodeCapReportsInconclusive) {
    const auto f = scalar({"sign(sin(t) - 0.3)"});
    AveragingOptions opt;
    opt.tol = 1e-15;
    opt.max_nodes = 1024;
    const auto rep = periodic_average(kTwoPi, 1, [&](double t, std::span<double> out) {
        f.eval_order(1, t, Vec{0.0}, out);
    }, opt);
    EXPECT_FALSE(rep.converged);
    EXPECT_EQ(rep.nodes_used, 1024);
}

TEST(Quadrature, TrigPolynomialsUpToDegreeEightAreExactWith64Nodes) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double T = 0.5 + 10.0 * std::abs(c(rng));
        const double w = 2 * std::numbers::pi / T;
        double a[9], b[9];
        for (int m = 0; m <= 8; ++m) a[m] = c(rng), b[m] = c(rng);
        auto p = [&](double t, std::span<double> out) {
            double s = a[0];
            for (int m = 1; m <= 8; ++m) s += a[m] * std::cos(m * w * t) + b[m] * std::sin(m * w * t);
            out[0] = s;
        };
        const Vec v = trapezoid_average(T, 1, 64, p);
        EXPECT_LT(std::abs(v[0] - a[0]), 1e-12) << trial;
    }
}

TEST(Remainder, SpecExamples) {
    const auto zero = scalar({"x1"});
    const auto r0 = remainder_average(zero, Vec{2.0}, 0.5);
    EXPECT_EQ(r0.value[0], 0.0);

    VectorFieldExpansion planar(2, kTwoPi, {{parse("x1"), parse("x2")}}, {parse("sin(t)"), parse("cos(t)")});
    const auto r1 = remainder_average(planar, Vec{0.3, 0.4}, 0.1);
    EXPECT_NEAR(r1.value[0], 0.0, 1e-10);
    EXPECT_NEAR(r1.value[1], 0.0, 1e-10);

    const auto lin = scalar({"x1"}, "eps*x1");
    EXPECT_NEAR(remainder_average(lin, Vec{2.0}, 0.5).value[0], 1.0, 1e-12);
}

TEST(Truncated, LinearInEpsForFirstOrder) {
    const auto f = scalar({"x1 - 1"});
    EXPECT_NEAR(truncated_averaged(f, Vec{3.0}, 0.1).value[0], 0.2, 1e-12);
}

TEST(Full, EqualsTruncatedWhenRemainderVanishes) {
    const auto f = scalar({"x1 - 1 + cos(t)", "x1^2 * sin(t)^2"});
    for (double z : {0.3, 1.0, 2.5}) {
        EXPECT_EQ(full_averaged(f, Vec{z}, 0.07).value, truncated_averaged(f, Vec{z}, 0.07).value);
    }
}

TEST(Full, LeadingOrderLimit) {
    const auto f = scalar({"x1 - 1 + cos(t)", "x1^2"}, "exp(x1) * cos(t)^2");
    const double f1 = 2.0 - 1.0;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double ratio = std::abs(full_averaged(f, Vec{2.0}, eps).value[0]) / eps;
        EXPECT_NEAR(ratio, f1, 10 * eps);
    }
}

TEST(Full, DifferenceBoundedByRemainder) {
    const auto f = scalar({"x1 * sin(t)", "cos(t)^2 - x1"}, "sin(x1 + t) * exp(-eps) + eps*x1");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> z(-1.0, 1.0), e(0.001, 0.2);
    double rmax = 0;
    for (int i = 0; i < 40; ++i)
        for (int j = 1; j <= 8; ++j)
            rmax = std::max(rmax, std::abs(remainder_average(f, Vec{-1.0 + i / 19.5}, 0.2 * j / 8).value[0]));
    for (int trial = 0; trial < 100; ++trial) {
        const double zz = z(rng), ee = e(rng);
        const double diff = full_averaged(f, Vec{zz}, ee).value[0] - truncated_averaged(f, Vec{zz}, ee).value[0];
        EXPECT_LE(std::abs(diff), std::pow(ee, 3) * (rmax + 1e-10) * 1.01 + 1e-15);
    }
}

TEST(Truncated, PolynomialFitRecoversAveragedOrders) {
    // F_k(z, eps) = sum eps^j f_j(z): fitting at eps, 2 eps, 3 eps recovers f_j.
    const auto f = scalar({"x1 + cos(t)", "x1^2 * sin(t)^2", "cbrt(x1) - sin(t)"});
    const double z = 1.7, h = 0.05;
    const double exact[3] = {1.7, 1.7 * 1.7 / 2, std::cbrt(1.7)};
    for (int k = 1; k <= 3; ++k) {
        std::vector<std::vector<Expression>> F(f.F().begin(), f.F().begin() + k);
        VectorFieldExpansion fk(1, kTwoPi, F);
        // Solve the k x k Vandermonde system in eps by Gaussian elimination.
        std::vector<std::vector<double>> A(k, std::vector<double>(k + 1));
        for (int i = 0; i < k; ++i) {
            const double e = h * (i + 1);
            for (int j = 0; j < k; ++j) A[i][j] = std::pow(e, j + 1);
            A[i][k] = truncated_averaged(fk, Vec{z}, e).value[0];
        }
        for (int c = 0; c < k; ++c)
            for (int r = c + 1; r < k; ++r) {
                const double m = A[r][c] / A[c][c];
                for (int j = c; j <= k; ++j) A[r][j] -= m * A[c][j];
            }
        std::vector<double> x(k);
        for (int r = k - 1; r >= 0; --r) {
            double s = A[r][k];
            for (int j = r + 1; j < k; ++j) s -= A[r][j] * x[j];
            x[r] = s / A[r][r];
        }
        for (int j = 0; j < k; ++j) EXPECT_NEAR(x[j], exact[j], 1e-8) << "k=" << k << " j=" << j + 1;
    }
}

TEST(LeadingOrder, SpecExamples) {
    EXPECT_EQ(detect_leading_order(scalar({"x1"}), {Vec{1.0}}), 1);
    EXPECT_EQ(detect_leading_order(scalar({"0", "cos(t)"}), {Vec{1.0}}), std::nullopt);
    EXPECT_EQ(detect_leading_order(scalar({"cos(t)*x1", "x1 - 2"}), {Vec{0.5}, Vec{1.0}}), 2);
    for (int k = 1; k <= 3; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto p = build_oscillator_problem(cfg);
        EXPECT_EQ(detect_leading_order(p.field, {Vec{0.6}, Vec{1.0}, Vec{1.4}}, 1e-6), k);
    }
}

TEST(BoundaryCheck, OscillatorPassesAndBoundaryZeroFails) {
    const auto p = build_oscillator_problem(OscillatorConfig{});
    const auto ok = check_boundary_nonvanishing(p.field, p.domain, {0.05, 0.01});
    ASSERT_EQ(ok.size(), 2u);
    for (const auto& e : ok) {
        EXPECT_TRUE(e.pass);
        EXPECT_FALSE(e.inconclusive);
        EXPECT_NEAR(e.min_modulus, e.eps * 0.22714007410401746, 1e-9);
        EXPECT_DOUBLE_EQ(e.argmin[0], 0.5);
    }
    const auto bad = check_boundary_nonvanishing(scalar({"x1 - 1"}), Box{{0.0}, {1.0}}, {0.1});
    ASSERT_EQ(bad.size(), 1u);
    EXPECT_FALSE(bad[0].pass);
    EXPECT_TRUE(check_boundary_nonvanishing(scalar({"x1"}), Box{{0.0}, {1.0}}, {}).empty());
}

TEST(Margin, ZeroRemainderPassesEverywhere) {
    const auto f = scalar({"x1 - 1"});
    const auto rep = lemma_hyp_margin(f, Box{{0.0}, {3.0}}, {0.1, 0.05}, 0.1);
    EXPECT_EQ(rep.r_max, 0.0);
    for (auto v : rep.verdict) EXPECT_EQ(v, Verdict::Pass);
}

TEST(Margin, VanishingTruncationFails) {
    const auto f = scalar({"cos(t)"}, "1");
    const auto rep = lemma_hyp_margin(f, Box{{0.0}, {1.0}}, {0.1, 0.05}, 0.1);
    EXPECT_NEAR(rep.r_max, 1.0, 1e-12);
    for (auto v : rep.verdict) EXPECT_EQ(v, Verdict::Fail);
}

TEST(Margin, OscillatorInfimumGrowsAsEpsDecreases) {
    const auto p = build_oscillator_problem(OscillatorConfig{});
    const auto rep = lemma_hyp_margin(p.field, p.domain, {0.05, 0.02, 0.01, 0.005}, 0.05);
    EXPECT_TRUE(rep.inf_increasing_as_eps_decreases);
    for (std::size_t i = 0; i < rep.eps_list.size(); ++i)
        EXPECT_NEAR(rep.inf_boundary[i], 0.22714007410401746 / rep.eps_list[i], 1e-6);
    EXPECT_THROW(lemma_hyp_margin(p.field, p.domain, {0.01, 0.02}, 0.05), std::invalid_argument);
}

TEST(Oscillator, AveragedOrdersMatchClosedForm) {
    for (int k = 1; k <= 3; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto p = build_oscillator_problem(cfg);
        for (int i = 0; i < 50; ++i) {
            const double r = 0.5 + i / 49.0;
            EXPECT_NEAR(average_order_j(p.field, k, Vec{r}).value[0], fk_closed_form(r), 1e-8) << r;
            for (int j = 1; j < k; ++j) EXPECT_LT(std::abs(average_order_j(p.field, j, Vec{r}).value[0]), 1e-9);
        }
    }
}

TEST(Oscillator, TruncatedAveragedSpecValues) {
    const auto p = build_oscillator_problem(OscillatorConfig{});
    EXPECT_NEAR(truncated_averaged(p.field, Vec{2.0}, 0.1).value[0], 0.14422495703074083, 1e-10);
    for (int k = 1; k <= 3; ++k) {
        OscillatorConfig cfg;
        cfg.k = k;
        const auto q = build_oscillator_problem(cfg);
        EXPECT_NEAR(truncated_averaged(q.field, Vec{1.0}, 0.03).value[0], 0.0, 1e-12);
    }
}

TEST(Oscillator, FullAveragedAgainstQuadratureOracle) {
    // Truncated remainder with E = 0: full = eps f_1.
    const auto p = build_oscillator_problem(OscillatorConfig{});
    EXPECT_NEAR(full_averaged(p.field, Vec{1.1}, 0.01).value[0], 0.01 * 0.32691570740197214, 1e-10);
    // Exact remainder: average of the exact radial field, high-precision quadrature value.
    OscillatorConfig cfg;
    cfg.remainder = RemainderMode::Exact;
    const auto q = build_oscillator_problem(cfg);
    EXPECT_NEAR(full_averaged(q.field, Vec{1.1}, 0.01).value[0], 0.0032694682240903317, 1e-10);
}
