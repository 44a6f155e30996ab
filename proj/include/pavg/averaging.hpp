#pragma once

// Averaged functions of a periodic field expansion and numerical checks of
// the boundary conditions used by the degree-based existence results.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pavg/parallel.hpp"
#include "pavg/problem.hpp"

namespace pavg {

inline constexpr double kDefaultAveragingTol = 1e-10;
inline constexpr double kDefaultZeroThreshold = 1e-9;

struct AveragingOptions {
    double tol = kDefaultAveragingTol;
    int base_nodes = 64;
    int max_nodes = 1 << 20;
};

struct AveragingReport {
    Vec value;
    long nodes_used = 0;
    double est_error = 0.0;  // max-norm gap between the last two refinement levels
    bool converged = true;
};

/// Composite trapezoid mean (1/T) sum f(i T / N) with a fixed node count.
template <class Integrand>
Vec trapezoid_average(double period, int n, long nodes, Integrand&& f) {
    Vec sum(static_cast<std::size_t>(n), 0.0), y(static_cast<std::size_t>(n));
    for (long i = 0; i < nodes; ++i) {
        f(period * static_cast<double>(i) / static_cast<double>(nodes), std::span<double>(y));
        for (int c = 0; c < n; ++c) sum[c] += y[c];
    }
    for (auto& s : sum) s /= static_cast<double>(nodes);
    return sum;
}

/// Mean over one period of a T-periodic integrand; node count doubles from
/// base_nodes until consecutive means agree within tol (max-norm) or the cap
/// is reached, in which case `converged` is false.
template <class Integrand>
AveragingReport periodic_average(double period, int n, Integrand&& f, const AveragingOptions& opt = {}) {
    const auto un = static_cast<std::size_t>(n);
    Vec sum(un, 0.0), y(un);
    auto eval = [&](double t) {
        try {
            f(t, std::span<double>(y));
        } catch (const EvalError& e) {
            throw EvalError(std::string(e.what()) + " (quadrature node t = " + std::to_string(t) + ")");
        }
    };
    long nodes = opt.base_nodes;
    for (long i = 0; i < nodes; ++i) {
        eval(period * static_cast<double>(i) / static_cast<double>(nodes));
        for (std::size_t c = 0; c < un; ++c) sum[c] += y[c];
    }
    Vec mean(un);
    for (std::size_t c = 0; c < un; ++c) mean[c] = sum[c] / static_cast<double>(nodes);

    for (;;) {
        for (long i = 0; i < nodes; ++i) {
            eval(period * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(nodes)));
            for (std::size_t c = 0; c < un; ++c) sum[c] += y[c];
        }
        nodes *= 2;
        double gap = 0.0;
        for (std::size_t c = 0; c < un; ++c) {
            const double m = sum[c] / static_cast<double>(nodes);
            gap = std::max(gap, std::abs(m - mean[c]));
            mean[c] = m;
        }
        if (gap < opt.tol) return {mean, nodes, gap, true};
        if (nodes >= opt.max_nodes) return {mean, nodes, gap, false};
    }
}

/// f_j(z) = (1/T) ∫_0^T F_j(s, z) ds.
inline AveragingReport average_order_j(const VectorFieldExpansion& field, int j, std::span<const double> z,
                                       double tol = kDefaultAveragingTol) {
    if (j < 1 || j > field.order())
        throw std::invalid_argument("average_order_j: order " + std::to_string(j) + " outside 1.." +
                                    std::to_string(field.order()));
    return periodic_average(
        field.period(), field.dimension(),
        [&](double t, std::span<double> out) { field.eval_order(j, t, z, out); }, AveragingOptions{tol});
}

/// r(z, eps) = (1/T) ∫_0^T R(s, z, eps) ds.
inline AveragingReport remainder_average(const VectorFieldExpansion& field, std::span<const double> z, double eps,
                                         double tol = kDefaultAveragingTol) {
    if (field.remainder_is_zero()) return {Vec(static_cast<std::size_t>(field.dimension()), 0.0), 0, 0.0, true};
    return periodic_average(
        field.period(), field.dimension(),
        [&](double t, std::span<double> out) { field.eval_remainder(t, z, eps, out); }, AveragingOptions{tol});
}

/// F_k(z, eps) = sum_{j=1..k} eps^j f_j(z). The report carries the largest
/// node count and error estimate among the orders.
inline AveragingReport truncated_averaged(const VectorFieldExpansion& field, std::span<const double> z, double eps,
                                          double tol = kDefaultAveragingTol) {
    AveragingReport out{Vec(static_cast<std::size_t>(field.dimension()), 0.0), 0, 0.0, true};
    double w = eps;
    for (int j = 1; j <= field.order(); ++j, w *= eps) {
        const auto fj = average_order_j(field, j, z, tol);
        for (std::size_t c = 0; c < out.value.size(); ++c) out.value[c] += w * fj.value[c];
        out.nodes_used = std::max(out.nodes_used, fj.nodes_used);
        out.est_error = std::max(out.est_error, fj.est_error);
        out.converged = out.converged && fj.converged;
    }
    return out;
}

/// f(z, eps) = F_k(z, eps) + eps^(k+1) r(z, eps).
inline AveragingReport full_averaged(const VectorFieldExpansion& field, std::span<const double> z, double eps,
                                     double tol = kDefaultAveragingTol) {
    AveragingReport out = truncated_averaged(field, z, eps, tol);
    if (field.remainder_is_zero()) return out;
    const auto r = remainder_average(field, z, eps, tol);
    const double w = std::pow(eps, field.order() + 1);
    for (std::size_t c = 0; c < out.value.size(); ++c) out.value[c] += w * r.value[c];
    out.nodes_used = std::max(out.nodes_used, r.nodes_used);
    out.est_error = std::max(out.est_error, r.est_error);
    out.converged = out.converged && r.converged;
    return out;
}

/// Smallest j with max over the grid of |f_j| > threshold; nullopt if none.
inline std::optional<int> detect_leading_order(const VectorFieldExpansion& field, const std::vector<Vec>& grid,
                                               double threshold = kDefaultZeroThreshold,
                                               double tol = kDefaultAveragingTol) {
    for (int j = 1; j <= field.order(); ++j) {
        double m = 0.0;
        for (const auto& z : grid) m = std::max(m, max_abs(average_order_j(field, j, z, tol).value));
        if (m > threshold) return j;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

struct BoundaryCheckOptions {
    int density = 16;
    double tol = kDefaultAveragingTol;
    int jobs = 1;
};

struct BoundaryCheckEntry {
    double eps = 0.0;
    double min_modulus = 0.0;  // min over sampled ∂V of |f(z, eps)|
    Vec argmin;
    bool pass = false;         // min_modulus > 10 tol
    bool inconclusive = false; // some quadrature hit the node cap
    int samples = 0;
};

/// Non-vanishing of the full averaged function on ∂V, per eps.
inline std::vector<BoundaryCheckEntry> check_boundary_nonvanishing(const VectorFieldExpansion& field,
                                                                   const DomainSpec& domain,
                                                                   const std::vector<double>& eps_grid,
                                                                   const BoundaryCheckOptions& opt = {}) {
    std::vector<BoundaryCheckEntry> report;
    if (eps_grid.empty()) return report;
    const auto samples = boundary_sample(domain, opt.density);
    for (double eps : eps_grid) {
        std::vector<AveragingReport> values(samples.size());
        parallel_for(samples.size(), opt.jobs,
                     [&](std::size_t i) { values[i] = full_averaged(field, samples[i].point, eps, opt.tol); });
        BoundaryCheckEntry e;
        e.eps = eps;
        e.samples = static_cast<int>(samples.size());
        e.min_modulus = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double m = norm(values[i].value);
            if (m < e.min_modulus) {
                e.min_modulus = m;
                e.argmin = samples[i].point;
            }
            e.inconclusive = e.inconclusive || !values[i].converged;
        }
        e.pass = e.min_modulus > 10 * opt.tol;
        report.push_back(std::move(e));
    }
    return report;
}

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "inconclusive";
    }
}

struct MarginOptions {
    int density = 16;
    int interior_per_axis = 32;
    int eps_samples = 16;
    double tol = kDefaultAveragingTol;
    int jobs = 1;
};

struct MarginReport {
    std::vector<double> eps_list;
    std::vector<double> inf_boundary;  // min over ∂V of |F_k(z, eps)| / eps^(k+1)
    double r_max = 0.0;                // sampled max |r(z, eps)| over V̄ × (0, eps_max]
    std::vector<Verdict> verdict;      // pass iff inf_boundary > r_max
    bool inf_increasing_as_eps_decreases = true;
    // sampling resolution behind r_max
    int interior_points = 0;
    int eps_samples = 0;
    int boundary_points = 0;
    double eps_max = 0.0;
};

/// Margin between the truncated averaged function on ∂V and the averaged
/// remainder. The lim-inf over eps is replaced by per-eps values on a
/// decreasing grid plus a monotonicity flag; r_max is a sampled maximum.
inline MarginReport lemma_hyp_margin(const VectorFieldExpansion& field, const DomainSpec& domain,
                                     const std::vector<double>& eps_grid, double eps_max,
                                     const MarginOptions& opt = {}) {
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        if (!(eps_grid[i] < eps_grid[i - 1]))
            throw std::invalid_argument("lemma_hyp_margin: eps_grid must be strictly decreasing");

    MarginReport rep;
    rep.eps_list = eps_grid;
    rep.eps_max = eps_max;
    bool inconclusive_r = false;

    // r_max over an interior grid crossed with eps in (0, eps_max]. eps = 0 is
    // left out: r is continuous, so the sup over the half-open range equals the
    // max over the closed one, and remainders written as difference quotients
    // in eps cannot be evaluated at 0.
    const auto grid = interior_grid(domain, opt.interior_per_axis);
    const auto boundary = boundary_sample(domain, opt.density);
    rep.interior_points = static_cast<int>(grid.size());
    rep.eps_samples = opt.eps_samples;
    rep.boundary_points = static_cast<int>(boundary.size());
    if (!field.remainder_is_zero()) {
        const std::size_t total = grid.size() * static_cast<std::size_t>(opt.eps_samples);
        std::vector<AveragingReport> values(total);
        parallel_for(total, opt.jobs, [&](std::size_t idx) {
            const auto& z = grid[idx / static_cast<std::size_t>(opt.eps_samples)];
            const double e = eps_max * static_cast<double>(idx % static_cast<std::size_t>(opt.eps_samples) + 1) /
                             opt.eps_samples;
            values[idx] = remainder_average(field, z, e, opt.tol);
        });
        for (const auto& v : values) {
            rep.r_max = std::max(rep.r_max, norm(v.value));
            inconclusive_r = inconclusive_r || !v.converged;
        }
    }

    for (double eps : eps_grid) {
        std::vector<AveragingReport> values(boundary.size());
        parallel_for(boundary.size(), opt.jobs,
                     [&](std::size_t i) { values[i] = truncated_averaged(field, boundary[i].point, eps, opt.tol); });
        double inf_b = std::numeric_limits<double>::infinity();
        bool inconclusive = inconclusive_r;
        const double scale = std::pow(eps, field.order() + 1);
        for (const auto& v : values) {
            inf_b = std::min(inf_b, norm(v.value) / scale);
            inconclusive = inconclusive || !v.converged;
        }
        rep.inf_boundary.push_back(inf_b);
        rep.verdict.push_back(inconclusive ? Verdict::Inconclusive
                                           : (inf_b > rep.r_max ? Verdict::Pass : Verdict::Fail));
    }
    for (std::size_t i = 1; i < rep.inf_boundary.size(); ++i)
        if (!(rep.inf_boundary[i] > rep.inf_boundary[i - 1])) rep.inf_increasing_as_eps_decreases = false;
    return rep;
}

}  // namespace pavg
