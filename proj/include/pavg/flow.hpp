#pragma once

// Direct integration of x' = eps * lambda * F(t, x, eps), period maps, search
// and certification of T-periodic orbits, and a finite search for periodic
// orbits of the lambda-homotoped system that touch the boundary of V.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pavg/degree.hpp"
#include "pavg/parallel.hpp"
#include "pavg/problem.hpp"

namespace pavg {

inline constexpr int kDefaultSteps = 4096;
inline constexpr double kDefaultResidualTol = 1e-8;

class FlowError : public std::runtime_error {
public:
    FlowError(const std::string& what, double time)
        : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    double step = 0.0;
    std::vector<std::string> warnings;
};

/// Classical four-stage Runge–Kutta with `steps` equal steps on [t0, t1].
/// rhs(t, x, dx) writes x'(t). With keep_states = false only the endpoints are
/// stored. Throws FlowError on a non-finite state.
template <class Rhs>
Trajectory rk4_integrate(Rhs&& rhs, double t0, double t1, const Vec& x0, int steps, bool keep_states = true) {
    const std::size_t n = x0.size();
    const double h = (t1 - t0) / steps;
    Trajectory traj;
    traj.step = h;
    const std::size_t reserve = keep_states ? static_cast<std::size_t>(steps) + 1 : 2;
    traj.times.reserve(reserve);
    traj.states.reserve(reserve);
    traj.times.push_back(t0);
    traj.states.push_back(x0);

    Vec x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * h;
        rhs(t, std::span<const double>(x), std::span<double>(k1));
        for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + 0.5 * h * k1[c];
        rhs(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k2));
        for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + 0.5 * h * k2[c];
        rhs(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k3));
        for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + h * k3[c];
        rhs(t + h, std::span<const double>(tmp), std::span<double>(k4));
        for (std::size_t c = 0; c < n; ++c) {
            x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            if (!std::isfinite(x[c])) throw FlowError("non-finite state", t + h);
        }
        if (keep_states || i + 1 == steps) {
            traj.times.push_back(i + 1 == steps ? t1 : t0 + (i + 1) * h);
            traj.states.push_back(x);
        }
    }
    return traj;
}

namespace detail {

inline auto homotoped_rhs(const VectorFieldExpansion& field, double eps, double lambda) {
    return [&field, eps, lambda](double t, std::span<const double> x, std::span<double> dx) {
        const double scale = eps * lambda;
        if (scale == 0.0) {
            std::fill(dx.begin(), dx.end(), 0.0);
            return;
        }
        try {
            field.eval_full(t, x, eps, dx);
        } catch (const EvalError& e) {
            throw FlowError(std::string("expression domain error: ") + e.what(), t);
        }
        for (auto& v : dx) v *= scale;
    };
}

inline void check_steps(int steps) {
    if (steps < 64) throw std::invalid_argument("integration needs steps >= 64");
}

}  // namespace detail

/// Solution of x' = eps * lambda * F(t, x, eps) on [t0, t0 + T], x(t0) = z0.
inline Trajectory integrate(const VectorFieldExpansion& field, double eps, double lambda, const Vec& z0,
                            int steps = kDefaultSteps, double t0 = 0.0) {
    detail::check_steps(steps);
    if (static_cast<int>(z0.size()) != field.dimension())
        throw std::invalid_argument("integrate: initial point has wrong dimension");
    return rk4_integrate(detail::homotoped_rhs(field, eps, lambda), t0, t0 + field.period(), z0, steps);
}

/// As above; records a warning when z0 lies outside V̄.
inline Trajectory integrate(const Problem& problem, double eps, double lambda, const Vec& z0,
                            int steps = kDefaultSteps, double t0 = 0.0) {
    Trajectory traj = integrate(problem.field, eps, lambda, z0, steps, t0);
    if (!domain_contains(problem.domain, z0, Closure::Closed))
        traj.warnings.push_back("initial point lies outside the closed domain");
    return traj;
}

/// P(z) = x(t0 + T) for x(t0) = z.
inline Vec period_map(const VectorFieldExpansion& field, double eps, double lambda, const Vec& z,
                      int steps = kDefaultSteps, double t0 = 0.0) {
    detail::check_steps(steps);
    return rk4_integrate(detail::homotoped_rhs(field, eps, lambda), t0, t0 + field.period(), z, steps, false)
        .states.back();
}

// ---------------------------------------------------------------------------
// Periodic orbits
// ---------------------------------------------------------------------------

enum class OrbitStatus { Certified, FoundUncertified, NotFound };

inline const char* to_string(OrbitStatus s) {
    switch (s) {
        case OrbitStatus::Certified: return "certified";
        case OrbitStatus::FoundUncertified: return "found, uncertified";
        default: return "not found";
    }
}

struct OrbitOptions {
    double box_halfwidth = 0.1;
    int steps = kDefaultSteps;
    double residual_tol = kDefaultResidualTol;
    double lambda = 1.0;
    double phase = 0.0;  // start time of the period map
    double fd_step = 1e-6;
    int max_iterations = 200;
    int certificate_density = 8;
    /// Distance of a state to the reference set reported as domain_stat;
    /// defaults to the distance from the orbit's initial point.
    std::function<double(const Vec&)> reference_distance;
};

struct OrbitResult {
    OrbitStatus status = OrbitStatus::NotFound;
    double eps = 0.0;
    double lambda = 1.0;
    double phase = 0.0;
    Vec initial_point;
    double residual = INFINITY;  // |P(z) - z|
    std::optional<DegreeCertificate> certificate;
    std::string note;
    Trajectory trajectory;
    double domain_stat = 0.0;  // max over t of the reference distance
    int map_evaluations = 0;
};

/// Searches a fixed point of the period map near `seed`: bisection on the
/// displacement sign in one dimension, damped Newton with a finite-difference
/// Jacobian otherwise. A found point is certified by a nonzero degree of the
/// displacement z -> P(z) - z on the box of half-width box_halfwidth around it.
inline OrbitResult find_periodic_orbit(const VectorFieldExpansion& field, double eps, const Vec& seed,
                                       const OrbitOptions& opt = {}) {
    if (eps == 0.0)
        throw std::invalid_argument("find_periodic_orbit: eps = 0 makes every point fixed; certification is meaningless");
    if (!(opt.box_halfwidth > 0)) throw std::invalid_argument("find_periodic_orbit: box_halfwidth must be > 0");
    const int n = field.dimension();
    if (static_cast<int>(seed.size()) != n) throw std::invalid_argument("find_periodic_orbit: seed has wrong dimension");

    OrbitResult res;
    res.eps = eps;
    res.lambda = opt.lambda;
    res.phase = opt.phase;

    auto displacement = [&](const Vec& z) {
        ++res.map_evaluations;
        Vec d = period_map(field, eps, opt.lambda, z, opt.steps, opt.phase);
        for (int i = 0; i < n; ++i) d[i] -= z[i];
        return d;
    };

    Vec best = seed;
    double best_res = INFINITY;
    auto consider = [&](const Vec& z, const Vec& d) {
        const double r = norm(d);
        if (r < best_res) {
            best_res = r;
            best = z;
        }
        return r;
    };

    if (n == 1) {
        auto D = [&](double z) { return displacement(Vec{z})[0]; };
        const double d0 = D(seed[0]);
        consider(seed, {d0});
        if (std::abs(d0) >= opt.residual_tol) {
            const double lo = seed[0] - opt.box_halfwidth, hi = seed[0] + opt.box_halfwidth;
            const double dlo = D(lo);
            consider({lo}, {dlo});
            double a = 0, b = 0, da = 0;
            bool bracket = false;
            if (std::signbit(dlo) != std::signbit(d0)) {
                a = lo, b = seed[0], da = dlo;
                bracket = true;
            } else {
                const double dhi = D(hi);
                consider({hi}, {dhi});
                if (std::signbit(dhi) != std::signbit(d0)) {
                    a = seed[0], b = hi, da = d0;
                    bracket = true;
                }
            }
            if (bracket && best_res >= opt.residual_tol) {
                for (int it = 0; it < opt.max_iterations; ++it) {
                    const double m = 0.5 * (a + b);
                    if (!(m > a && m < b)) break;
                    const double dm = D(m);
                    if (consider({m}, {dm}) < 1e-3 * opt.residual_tol || dm == 0.0) break;
                    if (std::signbit(dm) == std::signbit(da)) {
                        a = m;
                        da = dm;
                    } else {
                        b = m;
                    }
                }
            }
            if (!bracket) res.note = "no sign change of the displacement within the search interval";
        }
    } else {
        Vec z = seed;
        Vec d = displacement(z);
        double r = consider(z, d);
        for (int it = 0; it < opt.max_iterations && r >= 1e-3 * opt.residual_tol; ++it) {
            Eigen::MatrixXd J(n, n);
            for (int i = 0; i < n; ++i) {
                Vec zp = z;
                zp[i] += opt.fd_step;
                const Vec dp = displacement(zp);
                for (int row = 0; row < n; ++row) J(row, i) = (dp[row] - d[row]) / opt.fd_step;
            }
            Eigen::VectorXd rhs(n);
            for (int i = 0; i < n; ++i) rhs[i] = -d[i];
            const Eigen::VectorXd step = J.fullPivLu().solve(rhs);
            if (!step.allFinite()) break;
            bool accepted = false;
            for (double damp = 1.0; damp > 1e-10; damp *= 0.5) {
                Vec zn = z;
                for (int i = 0; i < n; ++i) zn[i] += damp * step[i];
                Vec dn = displacement(zn);
                const double rn = norm(dn);
                if (rn < r) {
                    z = std::move(zn);
                    d = std::move(dn);
                    r = consider(z, d);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
        if (best_res >= opt.residual_tol) res.note = "Newton iteration did not reach the residual tolerance";
    }

    res.initial_point = best;
    res.residual = best_res;
    if (best_res >= opt.residual_tol) {
        res.status = OrbitStatus::NotFound;
        return res;
    }

    // Degree of the displacement on the box around the fixed point.
    Box box{best, best};
    for (int i = 0; i < n; ++i) {
        box.lower[i] -= opt.box_halfwidth;
        box.upper[i] += opt.box_halfwidth;
    }
    try {
        DegreeOptions dopt;
        dopt.init_density = opt.certificate_density;
        res.certificate = degree_of_map(displacement, DomainSpec{box}, dopt);
        res.status = res.certificate->degree != 0 ? OrbitStatus::Certified : OrbitStatus::FoundUncertified;
        if (res.certificate->degree == 0) res.note = "displacement has degree 0 on the certification box";
    } catch (const DegreeError& e) {
        res.status = OrbitStatus::FoundUncertified;
        res.note = std::string("certificate failed: ") + e.what();
    }

    res.trajectory = integrate(field, eps, opt.lambda, best, opt.steps, opt.phase);
    res.domain_stat = 0.0;
    for (const auto& x : res.trajectory.states) {
        double dist;
        if (opt.reference_distance) {
            dist = opt.reference_distance(x);
        } else {
            dist = 0.0;
            for (int i = 0; i < n; ++i) dist += (x[i] - best[i]) * (x[i] - best[i]);
            dist = std::sqrt(dist);
        }
        res.domain_stat = std::max(res.domain_stat, dist);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Falsification search for boundary-touching periodic orbits
// ---------------------------------------------------------------------------

struct FalsifierOptions {
    int lambda_count = 4;
    int seeds_per_face = 4;
    int phase_count = 8;
    int steps = kDefaultSteps;
    double residual_tol = kDefaultResidualTol;
    double contact_tol = -1;        // default 1e-3 diam(V)
    double box_halfwidth = -1;      // default 0.05 diam(V)
    double inset = -1;              // inward offset of the second seed layer; default contact_tol / 2
    double containment_slack = -1;  // allowed excursion outside V̄; default 1e-3 contact_tol
    int jobs = 1;
};

struct Counterexample {
    double eps = 0.0;
    double lambda = 0.0;
    Vec initial_point;  // state at t = 0 (mod T)
    double residual = 0.0;
    double boundary_contact_time = 0.0;  // in [0, T)
    double min_boundary_distance = 0.0;
    bool certified = false;
};

struct HFalsifierReport {
    int eps_count = 0;
    int lambda_count = 0;
    int seed_count = 0;
    int phase_count = 0;
    int steps = 0;
    double contact_tol = 0.0;
    long trials = 0;
    long orbits_found = 0;
    long not_converged = 0;
    long failures = 0;  // integration or expression errors
    std::vector<Counterexample> counterexamples;
    std::string status;
};

/// Looks for T-periodic solutions of x' = eps lambda F(t, x, eps) in V̄ that
/// reach ∂V, over eps in eps_grid, lambda = i / lambda_count, seeds on and just
/// inside ∂V, and start phases t0 = T j / phase_count. A boundary-touching orbit
/// passes through ∂V at some phase, so seeding the period map started at that
/// phase from boundary points covers such orbits up to grid resolution.
/// A finite search can refute the confinement hypothesis but never confirm it.
inline HFalsifierReport falsify_hypothesis_h(const VectorFieldExpansion& field, const DomainSpec& domain,
                                             const std::vector<double>& eps_grid, FalsifierOptions opt = {}) {
    if (opt.lambda_count < 2) throw std::invalid_argument("falsify_hypothesis_h: lambda_count must be >= 2");
    if (opt.phase_count < 1) throw std::invalid_argument("falsify_hypothesis_h: phase_count must be >= 1");
    const double diam = diameter(domain);
    if (opt.contact_tol <= 0) opt.contact_tol = 1e-3 * diam;
    if (opt.box_halfwidth <= 0) opt.box_halfwidth = 0.05 * diam;
    if (opt.inset < 0) opt.inset = 0.5 * opt.contact_tol;
    if (opt.containment_slack < 0) opt.containment_slack = 1e-3 * opt.contact_tol;
    // Keep phase starts on the step grid so t = 0 (mod T) is a stored state.
    if (opt.steps % opt.phase_count != 0) opt.steps += opt.phase_count - opt.steps % opt.phase_count;

    std::vector<Vec> seeds;
    for (const auto& b : boundary_sample(domain, std::max(4, opt.seeds_per_face))) {
        seeds.push_back(b.point);
        if (norm(b.normal) > 0) {
            Vec inner = b.point;
            for (std::size_t i = 0; i < inner.size(); ++i) inner[i] -= opt.inset * b.normal[i];
            seeds.push_back(std::move(inner));
        }
    }

    HFalsifierReport rep;
    rep.eps_count = static_cast<int>(eps_grid.size());
    rep.lambda_count = opt.lambda_count;
    rep.seed_count = static_cast<int>(seeds.size());
    rep.phase_count = opt.phase_count;
    rep.steps = opt.steps;
    rep.contact_tol = opt.contact_tol;

    struct Trial {
        double eps, lambda, phase;
        int phase_index;
        const Vec* seed;
    };
    std::vector<Trial> trials;
    const double T = field.period();
    for (double eps : eps_grid)
        for (int l = 1; l <= opt.lambda_count; ++l)
            for (const auto& s : seeds)
                for (int j = 0; j < opt.phase_count; ++j)
                    trials.push_back({eps, static_cast<double>(l) / opt.lambda_count,
                                      T * j / opt.phase_count, j, &s});
    rep.trials = static_cast<long>(trials.size());

    enum class Outcome { Failed, NotConverged, Found };
    struct TrialResult {
        Outcome outcome = Outcome::Failed;
        std::optional<Counterexample> hit;
    };
    std::vector<TrialResult> results(trials.size());

    parallel_for(trials.size(), opt.jobs, [&](std::size_t idx) {
        const Trial& tr = trials[idx];
        TrialResult& out = results[idx];
        try {
            OrbitOptions oo;
            oo.box_halfwidth = opt.box_halfwidth;
            oo.steps = opt.steps;
            oo.residual_tol = opt.residual_tol;
            oo.lambda = tr.lambda;
            oo.phase = tr.phase;
            const OrbitResult orbit = find_periodic_orbit(field, tr.eps, *tr.seed, oo);
            if (orbit.status == OrbitStatus::NotFound) {
                out.outcome = Outcome::NotConverged;
                return;
            }
            out.outcome = Outcome::Found;
            const auto& traj = orbit.trajectory;
            double worst_out = 0.0, closest = INFINITY;
            std::size_t contact = 0;
            for (std::size_t i = 0; i < traj.states.size(); ++i) {
                worst_out = std::max(worst_out, outside_distance(domain, traj.states[i]));
                const double bd = boundary_distance(domain, traj.states[i]);
                if (bd < closest) {
                    closest = bd;
                    contact = i;
                }
            }
            if (worst_out > opt.containment_slack || closest > opt.contact_tol) return;
            const std::size_t zero_index =
                tr.phase_index == 0 ? 0
                                    : static_cast<std::size_t>(opt.steps / opt.phase_count * (opt.phase_count - tr.phase_index));
            Counterexample ce;
            ce.eps = tr.eps;
            ce.lambda = tr.lambda;
            ce.initial_point = traj.states[zero_index];
            ce.residual = orbit.residual;
            ce.boundary_contact_time = std::fmod(traj.times[contact], T);
            ce.min_boundary_distance = closest;
            ce.certified = orbit.status == OrbitStatus::Certified;
            out.hit = std::move(ce);
        } catch (const FlowError&) {
            out.outcome = Outcome::Failed;
        } catch (const EvalError&) {
            out.outcome = Outcome::Failed;
        }
    });

    for (auto& r : results) {
        switch (r.outcome) {
            case Outcome::Failed: ++rep.failures; break;
            case Outcome::NotConverged: ++rep.not_converged; break;
            case Outcome::Found: ++rep.orbits_found; break;
        }
        if (r.hit) rep.counterexamples.push_back(std::move(*r.hit));
    }
    rep.status = rep.counterexamples.empty() ? "no counterexample at this resolution" : "counterexample found";
    return rep;
}

}  // namespace pavg
