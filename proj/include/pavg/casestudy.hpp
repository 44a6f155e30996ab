#pragma once

// Continuous, non-Lipschitz higher-order perturbation of the harmonic
// oscillator, reduced to a scalar equation for the radius r over the angle.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pavg/averaging.hpp"
#include "pavg/degree.hpp"
#include "pavg/flow.hpp"
#include "pavg/problem.hpp"

namespace pavg {

/// How the remainder slot R(θ, r, ε) is filled.
///  - Truncated: only the E contribution at leading order, R = -E(r cos θ, -r sin θ, ε) sin θ.
///  - Exact (k = 1 only): R closes the gap to the exact polar reduction of the
///    planar system x' = -y, y' = x + ε q(x, y, ε), so that the scalar equation
///    is conjugate to the Cartesian one.
enum class RemainderMode { Truncated, Exact };

struct OscillatorConfig {
    int k = 1;
    double alpha = 0.5;
    Expression E;  // in x1, x2, eps; default 0
    std::vector<double> eps_grid{0.05, 0.02, 0.01, 0.005};
    RemainderMode remainder = RemainderMode::Truncated;
    /// Build the field for ε < 0: the problem is then posed in δ = -ε > 0.
    bool negative_eps = false;
};

inline void validate(const OscillatorConfig& cfg) {
    if (cfg.k < 1) throw std::invalid_argument("oscillator: k must be >= 1");
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) throw std::invalid_argument("oscillator: alpha must lie in (0, 1)");
    const auto bad = check_bindings(cfg.E, {"x1", "x2", "eps"});
    if (!bad.empty()) throw std::invalid_argument("oscillator: E may only use x1, x2, eps; found " + bad.front());
    if (cfg.remainder == RemainderMode::Exact && cfg.k != 1)
        throw std::invalid_argument("oscillator: the exact remainder is bounded in eps only for k = 1");
    for (std::size_t i = 0; i < cfg.eps_grid.size(); ++i) {
        if (!(cfg.eps_grid[i] > 0)) throw std::invalid_argument("oscillator: eps_grid entries must be > 0");
        if (i > 0 && !(cfg.eps_grid[i] < cfg.eps_grid[i - 1]))
            throw std::invalid_argument("oscillator: eps_grid must be strictly decreasing");
    }
}

/// r ∛(r² - 1) / 2 with the real cube root.
inline double fk_closed_form(double r) { return r * std::cbrt(r * r - 1.0) / 2.0; }

namespace detail {

inline std::string power_text(const std::string& base, int p) {
    if (p == 0) return "";
    if (p == 1) return base;
    return base + "^" + std::to_string(p);
}

inline std::string product_text(std::initializer_list<std::string> factors) {
    std::string s;
    for (const auto& f : factors) {
        if (f.empty()) continue;
        s += (s.empty() ? "" : " * ") + f;
    }
    return s.empty() ? "1" : s;
}

// E expressed in polar variables of the time-forward angle t.
inline std::string polar_E(const Expression& E) {
    return "(" + to_string(substitute(E, {{"x1", parse("x1 * cos(t)")}, {"x2", parse("-(x1 * sin(t))")}})) + ")";
}

}  // namespace detail

/// F_1..F_k of the radial equation dr/dθ = ε F(θ, r, ε), as expression text in
/// t = θ and x1 = r.
inline std::vector<std::string> oscillator_orders_text(int k) {
    using detail::power_text, detail::product_text;
    std::vector<std::string> out;
    for (int i = 1; i < k; ++i)
        out.push_back(product_text({power_text("x1", i + 1), power_text("cos(t)", i - 1), "sin(t)"}));
    const std::string lead = product_text({power_text("x1", k), power_text("cos(t)", k - 1)});
    out.push_back("x1 * (" + lead + " + cbrt(x1^2 - 1) * sin(t)) * sin(t)");
    return out;
}

inline Expression oscillator_remainder(const OscillatorConfig& cfg) {
    if (cfg.remainder == RemainderMode::Truncated) {
        if (cfg.E.is_zero_constant()) return Expression();
        return parse("-" + detail::polar_E(cfg.E) + " * sin(t)");
    }
    std::string H = "(x1^2 + x1 * sin(t) * cbrt(x1^2 - 1)";
    if (!cfg.E.is_zero_constant()) H += " - eps * " + detail::polar_E(cfg.E);
    H += ")";
    const std::string F1 = oscillator_orders_text(1).front();
    return parse("(" + H + " * sin(t) / (1 + eps * " + H + " * cos(t) / x1) - (" + F1 + ")) / eps");
}

inline Problem build_oscillator_problem(const OscillatorConfig& cfg) {
    validate(cfg);
    std::vector<std::vector<Expression>> F;
    const auto orders = oscillator_orders_text(cfg.k);
    for (std::size_t j = 0; j < orders.size(); ++j) {
        const bool flip = cfg.negative_eps && (j + 1) % 2 == 1;
        F.push_back({parse(flip ? "-(" + orders[j] + ")" : orders[j])});
    }
    Expression R = oscillator_remainder(cfg);
    if (cfg.negative_eps && !R.is_zero_constant()) {
        // With ε = -δ: G_i = (-1)^i F_i and R_G(δ) = -(-1)^k R(-δ).
        R = substitute(R, {{"eps", parse("-eps")}});
        if (cfg.k % 2 == 0) R = parse("-(" + to_string(R) + ")");
    }
    const double eps_max = cfg.eps_grid.empty() ? 0.05 : cfg.eps_grid.front();
    Problem p{VectorFieldExpansion(1, 2 * std::numbers::pi, std::move(F), {R}),
              Box{{1.0 - cfg.alpha}, {1.0 + cfg.alpha}}, eps_max, cfg.eps_grid};
    validate(p);
    return p;
}

/// Right-hand side of the planar system x' = -y, y' = x + ε q(x, y, ε),
/// q = x² + y² + ε^(k-1) y ∛(x² + y² - 1) - ε^k E(x, -y, ε), whose exact polar
/// reduction over the angle is the radial equation with the exact remainder.
inline auto oscillator_cartesian_rhs(const OscillatorConfig& cfg, double eps) {
    const std::vector<std::string> layout{"x1", "x2", "eps"};
    Program e = Program::compile(cfg.E, layout);
    const bool has_e = !cfg.E.is_zero_constant();
    const int k = cfg.k;
    return [e = std::move(e), has_e, k, eps](double, std::span<const double> z, std::span<double> dz) {
        const double x = z[0], y = z[1];
        double q = x * x + y * y + std::pow(eps, k - 1) * y * std::cbrt(x * x + y * y - 1.0);
        if (has_e) {
            const double args[3] = {x, -y, eps};
            q -= std::pow(eps, k) * e(args);
        }
        dz[0] = -y;
        dz[1] = x + eps * q;
    };
}

// ---------------------------------------------------------------------------
// End-to-end reproduction
// ---------------------------------------------------------------------------

struct ReproduceOptions {
    int steps = kDefaultSteps;
    double residual_tol = kDefaultResidualTol;
    double box_halfwidth = 0.05;  // certification box around the orbit's r(0)
    double tol = kDefaultAveragingTol;
    int jobs = 1;
    FalsifierOptions falsifier{};
    MarginOptions margin{};
};

struct PropositionRow {
    double eps = 0.0;
    std::string orbit_status = "not found";
    double orbit_radius_max_dev = NAN;  // max over θ of |r(θ) - 1|
    double initial_radius = NAN;
    double residual = NAN;
    std::optional<int> degree;           // displacement on the certification box
    std::optional<int> averaged_degree;  // truncated averaged field on V
    std::string h_status;
    std::size_t h_counterexamples = 0;
    double inf_boundary = NAN;
    std::string margin_verdict;
    std::vector<std::string> notes;
};

struct PropositionTable {
    OscillatorConfig config;
    Problem problem;
    MarginReport margin;
    std::vector<PropositionRow> rows;
};

inline PropositionTable reproduce_proposition(const OscillatorConfig& cfg, const ReproduceOptions& opt = {}) {
    PropositionTable table{cfg, build_oscillator_problem(cfg), {}, {}};
    const Problem& p = table.problem;
    const auto& field = p.field;

    MarginOptions mopt = opt.margin;
    mopt.tol = opt.tol;
    mopt.jobs = opt.jobs;
    std::string margin_error;
    try {
        table.margin = lemma_hyp_margin(field, p.domain, cfg.eps_grid, p.eps_max, mopt);
    } catch (const std::exception& e) {
        margin_error = e.what();
    }

    for (std::size_t i = 0; i < cfg.eps_grid.size(); ++i) {
        PropositionRow row;
        row.eps = cfg.eps_grid[i];
        const double eps = row.eps;

        if (margin_error.empty()) {
            row.inf_boundary = table.margin.inf_boundary[i];
            row.margin_verdict = to_string(table.margin.verdict[i]);
        } else {
            row.margin_verdict = "error";
            row.notes.push_back("margin: " + margin_error);
        }

        try {
            auto averaged = [&](const Vec& z) { return truncated_averaged(field, z, eps, opt.tol).value; };
            row.averaged_degree = degree_of_map(averaged, p.domain).degree;
        } catch (const std::exception& e) {
            row.notes.push_back(std::string("averaged degree: ") + e.what());
        }

        try {
            FalsifierOptions fopt = opt.falsifier;
            fopt.steps = opt.steps;
            fopt.residual_tol = opt.residual_tol;
            fopt.jobs = opt.jobs;
            const auto h = falsify_hypothesis_h(field, p.domain, {eps}, fopt);
            row.h_status = h.status;
            row.h_counterexamples = h.counterexamples.size();
        } catch (const std::exception& e) {
            row.h_status = "error";
            row.notes.push_back(std::string("falsifier: ") + e.what());
        }

        try {
            OrbitOptions oo;
            oo.steps = opt.steps;
            oo.residual_tol = opt.residual_tol;
            oo.box_halfwidth = opt.box_halfwidth;
            oo.reference_distance = [](const Vec& x) { return std::abs(x[0] - 1.0); };
            const auto orbit = find_periodic_orbit(field, eps, {1.0}, oo);
            row.orbit_status = to_string(orbit.status);
            row.residual = orbit.residual;
            row.initial_radius = orbit.initial_point[0];
            if (orbit.status != OrbitStatus::NotFound) row.orbit_radius_max_dev = orbit.domain_stat;
            if (orbit.certificate) row.degree = orbit.certificate->degree;
            if (!orbit.note.empty()) row.notes.push_back("orbit: " + orbit.note);
        } catch (const std::exception& e) {
            row.orbit_status = "error";
            row.notes.push_back(std::string("orbit: ") + e.what());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace pavg
