#pragma once

// Command-line front end. Every command prints one report
//   {"command", "inputs", "outputs", "status", "timing_s"}
// and returns 0 on success, 1 on a computational failure, 2 on a usage or
// input error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pavg/averaging.hpp"
#include "pavg/casestudy.hpp"
#include "pavg/degree.hpp"
#include "pavg/flow.hpp"
#include "pavg/problem.hpp"
#include "pavg/report.hpp"
#include "pavg/zeros.hpp"

namespace pavg::cli {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2 };

/// Bad flag values detected after parsing.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string format = "json";
    std::string out;
    double tol = kDefaultAveragingTol;
    int steps = kDefaultSteps;
    int jobs = 1;
    bool no_timing = false;
};

struct CommandResult {
    ojson inputs = ojson::object();
    ojson outputs = ojson::object();
    bool ok = true;
    std::string error;
};

inline std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, end - pos);
        char* stop = nullptr;
        const double v = std::strtod(item.c_str(), &stop);
        if (item.empty() || stop != item.c_str() + item.size() || !std::isfinite(v))
            throw UsageError(flag + ": '" + item + "' is not a number");
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

/// "lo:hi:count" per axis, axes separated by commas.
inline std::vector<Vec> parse_grid_spec(const std::string& spec, int n) {
    std::vector<std::vector<double>> axes;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t end = std::min(spec.find(',', pos), spec.size());
        const std::string part = spec.substr(pos, end - pos);
        std::vector<std::string> f;
        std::size_t p = 0;
        while (p <= part.size()) {
            const std::size_t e = std::min(part.find(':', p), part.size());
            f.push_back(part.substr(p, e - p));
            p = e + 1;
        }
        if (f.size() != 3) throw UsageError("--grid: expected lo:hi:count per axis, got '" + part + "'");
        const double lo = parse_number_list(f[0], "--grid").front();
        const double hi = parse_number_list(f[1], "--grid").front();
        const double cnt = parse_number_list(f[2], "--grid").front();
        if (cnt < 1 || cnt != std::floor(cnt)) throw UsageError("--grid: count must be a positive integer");
        std::vector<double> axis;
        const int m = static_cast<int>(cnt);
        for (int i = 0; i < m; ++i) axis.push_back(m == 1 ? lo : lo + (hi - lo) * i / (m - 1));
        axes.push_back(std::move(axis));
        pos = end + 1;
    }
    if (static_cast<int>(axes.size()) != n)
        throw UsageError("--grid: expected " + std::to_string(n) + " axis spec(s), got " + std::to_string(axes.size()));
    std::vector<Vec> points;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
        Vec z;
        for (std::size_t a = 0; a < axes.size(); ++a) z.push_back(axes[a][idx[a]]);
        points.push_back(std::move(z));
        std::size_t a = 0;
        while (a < idx.size() && ++idx[a] == axes[a].size()) idx[a++] = 0;
        if (a == idx.size()) break;
    }
    return points;
}

namespace detail {

inline ojson base_inputs(const Globals& g) {
    ojson j;
    j["format"] = g.format;
    j["tol"] = g.tol;
    j["steps"] = g.steps;
    return j;
}

inline std::vector<double> grid_or_default(const std::string& text, const std::vector<double>& fallback,
                                           const std::string& flag) {
    return text.empty() ? fallback : parse_number_list(text, flag);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Higher-order averaging toolkit for periodic solutions of perturbed ODEs", "pavg"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", g.out, "Write the report to PATH instead of stdout");
    app.add_option("--tol", g.tol, "Quadrature tolerance for averaged functions");
    app.add_option("--steps", g.steps, "RK4 steps per period");
    app.add_option("--jobs", g.jobs, "Worker threads for parallel sweeps");
    app.add_flag("--no-timing", g.no_timing, "Report timing_s = 0 (byte-stable output)");

    std::string file, grid_spec, eps_grid_text, seed_text, trajectory_path, problem_out, e_text = "0",
                                                                                 remainder = "truncated";
    double eps = NAN, eps_max = NAN, box_halfwidth = NAN, lambda = 1.0, residual_tol = kDefaultResidualTol,
           contact_tol = NAN, alpha = 0.5;
    int order = 0, depth = 10, density = 16, interior = 32, eps_samples = 16, lambda_count = 4, seeds_per_face = 4,
        phases = 8, k = 1;
    bool negative_eps = false;

    auto add_file = [&](CLI::App* s) { s->add_option("file", file, "Problem file (JSON)")->required(); };
    auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };

    auto* c_parse = sub("parse", "Load and validate a problem file");
    add_file(c_parse);

    auto* c_average = sub("average", "Averaged function f_j on a grid");
    add_file(c_average);
    c_average->add_option("--order", order, "Averaged order j")->required();
    c_average->add_option("--grid", grid_spec, "lo:hi:count per axis, comma separated");
    c_average->add_option("--eps", eps, "Also report the truncated and full averaged functions at eps");

    auto* c_degree = sub("degree", "Brouwer degree of an averaged function on V");
    add_file(c_degree);
    c_degree->add_option("--eps", eps, "Use the truncated averaged function at eps");
    c_degree->add_option("--order", order, "Use f_j alone");
    c_degree->add_option("--density", density, "Initial boundary sampling density");

    auto* c_zeros = sub("zeros", "Localize zeros of the leading averaged function");
    add_file(c_zeros);
    c_zeros->add_option("--depth", depth, "Total bisections of V");
    c_zeros->add_option("--order", order, "Averaged order (default: leading order)");

    auto* c_check_a = sub("check-a", "Boundary non-vanishing of the truncated averaged function");
    add_file(c_check_a);
    c_check_a->add_option("--eps-grid", eps_grid_text, "Comma-separated eps values (default: from file)");
    c_check_a->add_option("--density", density, "Boundary sampling density");

    auto* c_check_b = sub("check-b", "Margin between the averaged truncation and remainder");
    add_file(c_check_b);
    c_check_b->add_option("--eps-grid", eps_grid_text, "Comma-separated eps values (default: from file)");
    c_check_b->add_option("--eps-max", eps_max, "Upper end of the remainder eps range (default: from file)");
    c_check_b->add_option("--density", density, "Boundary sampling density");
    c_check_b->add_option("--interior", interior, "Interior grid points per axis");
    c_check_b->add_option("--eps-samples", eps_samples, "eps samples for the remainder bound");

    auto* c_hcheck = sub("hcheck", "Search for boundary-touching periodic orbits of the homotoped system");
    add_file(c_hcheck);
    c_hcheck->add_option("--eps-grid", eps_grid_text, "Comma-separated eps values (default: from file)");
    c_hcheck->add_option("--lambda-count", lambda_count, "lambda = i / count, i = 1..count");
    c_hcheck->add_option("--seeds-per-face", seeds_per_face, "Boundary seed density");
    c_hcheck->add_option("--phases", phases, "Start phases per period");
    c_hcheck->add_option("--contact-tol", contact_tol, "Boundary contact tolerance (default 1e-3 diam V)");
    c_hcheck->add_option("--box-halfwidth", box_halfwidth, "Orbit search half-width (default 0.05 diam V)");
    c_hcheck->add_option("--residual-tol", residual_tol, "Fixed-point residual tolerance");

    auto* c_verify = sub("verify", "Find and certify a periodic orbit near a seed");
    add_file(c_verify);
    c_verify->add_option("--eps", eps, "Perturbation size")->required();
    c_verify->add_option("--seed", seed_text, "Comma-separated seed point")->required();
    c_verify->add_option("--box-halfwidth", box_halfwidth, "Search and certification half-width (default 0.05 diam V)");
    c_verify->add_option("--lambda", lambda, "Homotopy parameter");
    c_verify->add_option("--residual-tol", residual_tol, "Fixed-point residual tolerance");
    c_verify->add_option("--trajectory", trajectory_path, "Write the orbit as columns t x1 .. xn");

    auto* c_osc = sub("oscillator", "Perturbed harmonic oscillator: orbit table over eps");
    c_osc->add_option("--k", k, "Order of the cube-root term");
    c_osc->add_option("--alpha", alpha, "Half-width of V = (1 - alpha, 1 + alpha)");
    c_osc->add_option("--eps-grid", eps_grid_text, "Comma-separated decreasing eps values");
    c_osc->add_option("--E", e_text, "Higher-order term E(x1, x2, eps)");
    c_osc->add_option("--remainder", remainder, "Remainder slot")->check(CLI::IsMember({"truncated", "exact"}));
    c_osc->add_flag("--negative-eps", negative_eps, "Pose the problem for eps < 0");
    c_osc->add_option("--problem-out", problem_out, "Write the generated problem file");
    c_osc->add_option("--lambda-count", lambda_count, "Falsifier lambda resolution");
    c_osc->add_option("--phases", phases, "Falsifier start phases");
    c_osc->add_option("--box-halfwidth", box_halfwidth, "Orbit certification half-width (default 0.05)");
    c_osc->add_option("--residual-tol", residual_tol, "Fixed-point residual tolerance");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    const auto start = std::chrono::steady_clock::now();
    CommandResult res;
    res.inputs = detail::base_inputs(g);
    int code = kOk;

    try {
        if (g.steps < 64) throw UsageError("--steps must be >= 64");
        if (g.jobs < 1) throw UsageError("--jobs must be >= 1");
        if (!(g.tol > 0)) throw UsageError("--tol must be > 0");

        auto load = [&] {
            res.inputs["file"] = file;
            return load_problem(file);
        };

        if (chosen == c_parse) {
            const Problem p = load();
            res.outputs["problem"] = problem_to_json(p);
            const auto lead = detect_leading_order(p.field, interior_grid(p.domain, 8), kDefaultZeroThreshold, g.tol);
            res.outputs["leading_order"] = lead ? ojson(*lead) : ojson(nullptr);
            auto rows = ojson::array();
            for (std::size_t j = 0; j < p.field.F().size(); ++j)
                for (std::size_t c = 0; c < p.field.F()[j].size(); ++c)
                    rows.push_back({{"slot", VectorFieldExpansion::slot_name(j, c)},
                                    {"expression", to_string(p.field.F()[j][c])}});
            for (std::size_t c = 0; c < p.field.R().size(); ++c)
                rows.push_back({{"slot", "R[" + std::to_string(c + 1) + "]"}, {"expression", to_string(p.field.R()[c])}});
            res.outputs["rows"] = std::move(rows);
        } else if (chosen == c_average) {
            const Problem p = load();
            if (order < 1 || order > p.field.order())
                throw UsageError("--order must lie in [1, " + std::to_string(p.field.order()) + "]");
            const auto points = grid_spec.empty() ? interior_grid(p.domain, 9) : parse_grid_spec(grid_spec, p.field.dimension());
            res.inputs["order"] = order;
            res.inputs["grid"] = grid_spec.empty() ? ojson("interior 9 per axis") : ojson(grid_spec);
            const bool with_eps = std::isfinite(eps);
            if (with_eps) res.inputs["eps"] = eps;
            std::vector<ojson> rows(points.size());
            parallel_for(points.size(), g.jobs, [&](std::size_t i) {
                const auto a = average_order_j(p.field, order, points[i], g.tol);
                ojson row;
                row["z"] = points[i];
                row["f"] = a.value;
                row["est_error"] = a.est_error;
                row["nodes_used"] = a.nodes_used;
                row["converged"] = a.converged;
                if (with_eps) {
                    row["truncated"] = truncated_averaged(p.field, points[i], eps, g.tol).value;
                    row["full"] = full_averaged(p.field, points[i], eps, g.tol).value;
                }
                rows[i] = std::move(row);
            });
            res.outputs["rows"] = rows;
        } else if (chosen == c_degree) {
            const Problem p = load();
            DegreeOptions dopt;
            dopt.init_density = density;
            std::function<Vec(const Vec&)> map;
            std::string label;
            if (order > 0) {
                if (order > p.field.order()) throw UsageError("--order exceeds order_k");
                map = [&](const Vec& z) { return average_order_j(p.field, order, z, g.tol).value; };
                label = "f_" + std::to_string(order);
                res.inputs["order"] = order;
            } else if (std::isfinite(eps)) {
                map = [&](const Vec& z) { return truncated_averaged(p.field, z, eps, g.tol).value; };
                label = "truncated averaged function";
                res.inputs["eps"] = eps;
            } else {
                const auto lead = detect_leading_order(p.field, interior_grid(p.domain, 8), kDefaultZeroThreshold, g.tol);
                if (!lead) throw std::runtime_error("all averaged orders vanish on the sample grid");
                order = *lead;
                map = [&](const Vec& z) { return average_order_j(p.field, order, z, g.tol).value; };
                label = "f_" + std::to_string(order) + " (leading order)";
            }
            res.inputs["density"] = density;
            res.outputs["map"] = label;
            try {
                res.outputs["certificate"] = to_json(degree_of_map(map, p.domain, dopt));
            } catch (const DegreeError& e) {
                res.ok = false;
                res.error = e.what();
            }
        } else if (chosen == c_zeros) {
            const Problem p = load();
            ZerosOptions zopt;
            zopt.depth = depth;
            zopt.tol = g.tol;
            zopt.jobs = g.jobs;
            if (order > 0) zopt.order = order;
            res.inputs["depth"] = depth;
            const auto z = locate_zeros(p.field, p.domain, zopt);
            res.outputs["order"] = z.order;
            res.outputs["splits"] = z.splits;
            res.outputs["cells_total"] = z.cells_total;
            res.outputs["cells_in_domain"] = z.cells_in_domain;
            res.outputs["cells_flagged"] = z.cells_flagged;
            auto rows = ojson::array();
            int certified = 0;
            for (const auto& c : z.zeros) {
                ojson row;
                row["estimate"] = c.estimate;
                row["lower"] = c.box.lower;
                row["upper"] = c.box.upper;
                row["cells"] = c.cells;
                row["degree"] = c.degree ? ojson(*c.degree) : ojson(nullptr);
                row["certified"] = c.certified;
                row["note"] = c.note;
                certified += c.certified ? 1 : 0;
                rows.push_back(std::move(row));
            }
            res.outputs["certified_zeros"] = certified;
            res.outputs["rows"] = std::move(rows);
        } else if (chosen == c_check_a) {
            const Problem p = load();
            const auto grid = detail::grid_or_default(eps_grid_text, p.eps_grid, "--eps-grid");
            res.inputs["eps_grid"] = grid;
            res.inputs["density"] = density;
            BoundaryCheckOptions bopt;
            bopt.density = density;
            bopt.tol = g.tol;
            bopt.jobs = g.jobs;
            res.outputs = to_json(check_boundary_nonvanishing(p.field, p.domain, grid, bopt));
        } else if (chosen == c_check_b) {
            const Problem p = load();
            const auto grid = detail::grid_or_default(eps_grid_text, p.eps_grid, "--eps-grid");
            const double emax = std::isfinite(eps_max) ? eps_max : p.eps_max;
            res.inputs["eps_grid"] = grid;
            res.inputs["eps_max"] = emax;
            MarginOptions mopt;
            mopt.density = density;
            mopt.interior_per_axis = interior;
            mopt.eps_samples = eps_samples;
            mopt.tol = g.tol;
            mopt.jobs = g.jobs;
            res.outputs = to_json(lemma_hyp_margin(p.field, p.domain, grid, emax, mopt));
        } else if (chosen == c_hcheck) {
            const Problem p = load();
            const auto grid = detail::grid_or_default(eps_grid_text, p.eps_grid, "--eps-grid");
            FalsifierOptions fopt;
            fopt.lambda_count = lambda_count;
            fopt.seeds_per_face = seeds_per_face;
            fopt.phase_count = phases;
            fopt.steps = g.steps;
            fopt.residual_tol = residual_tol;
            if (std::isfinite(contact_tol)) fopt.contact_tol = contact_tol;
            if (std::isfinite(box_halfwidth)) fopt.box_halfwidth = box_halfwidth;
            fopt.jobs = g.jobs;
            res.inputs["eps_grid"] = grid;
            res.inputs["residual_tol"] = residual_tol;
            res.outputs = to_json(falsify_hypothesis_h(p.field, p.domain, grid, fopt));
        } else if (chosen == c_verify) {
            const Problem p = load();
            const Vec seed = parse_number_list(seed_text, "--seed");
            if (static_cast<int>(seed.size()) != p.field.dimension())
                throw UsageError("--seed needs " + std::to_string(p.field.dimension()) + " component(s)");
            if (eps == 0.0) throw UsageError("--eps must be nonzero: at eps = 0 every point is periodic");
            OrbitOptions oo;
            oo.steps = g.steps;
            oo.residual_tol = residual_tol;
            oo.lambda = lambda;
            oo.box_halfwidth = std::isfinite(box_halfwidth) ? box_halfwidth : 0.05 * diameter(p.domain);
            res.inputs["eps"] = eps;
            res.inputs["seed"] = seed;
            res.inputs["lambda"] = lambda;
            res.inputs["box_halfwidth"] = oo.box_halfwidth;
            res.inputs["residual_tol"] = residual_tol;
            const auto orbit = find_periodic_orbit(p.field, eps, seed, oo);
            res.outputs = to_json(orbit);
            if (orbit.status == OrbitStatus::NotFound) {
                res.ok = false;
                res.error = "no periodic orbit found near the seed: " + orbit.note;
            } else if (!trajectory_path.empty()) {
                std::ofstream t(trajectory_path);
                if (!t) throw UsageError("cannot write trajectory file '" + trajectory_path + "'");
                write_trajectory(t, orbit.trajectory);
            }
        } else if (chosen == c_osc) {
            OscillatorConfig cfg;
            cfg.k = k;
            cfg.alpha = alpha;
            try {
                cfg.E = parse(e_text);
            } catch (const ParseError& e) {
                throw UsageError(std::string("--E: ") + e.what());
            }
            if (!eps_grid_text.empty()) cfg.eps_grid = parse_number_list(eps_grid_text, "--eps-grid");
            cfg.remainder = remainder == "exact" ? RemainderMode::Exact : RemainderMode::Truncated;
            cfg.negative_eps = negative_eps;
            try {
                validate(cfg);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            ReproduceOptions ropt;
            ropt.steps = g.steps;
            ropt.residual_tol = residual_tol;
            ropt.tol = g.tol;
            ropt.jobs = g.jobs;
            if (std::isfinite(box_halfwidth)) ropt.box_halfwidth = box_halfwidth;
            ropt.falsifier.lambda_count = lambda_count;
            ropt.falsifier.phase_count = phases;
            res.inputs["k"] = k;
            res.inputs["alpha"] = alpha;
            res.inputs["eps_grid"] = cfg.eps_grid;
            res.inputs["E"] = to_string(cfg.E);
            res.inputs["remainder"] = remainder;
            res.inputs["negative_eps"] = negative_eps;
            res.inputs["residual_tol"] = residual_tol;
            res.inputs["box_halfwidth"] = ropt.box_halfwidth;

            const auto table = reproduce_proposition(cfg, ropt);
            if (!problem_out.empty()) {
                std::ofstream pf(problem_out);
                if (!pf) throw UsageError("cannot write problem file '" + problem_out + "'");
                write_json(pf, problem_to_json(table.problem));
            }
            auto rows = ojson::array();
            bool all_certified = true;
            for (const auto& r : table.rows) {
                ojson row;
                row["eps"] = r.eps;
                row["orbit_status"] = r.orbit_status;
                row["orbit_radius_max_dev"] = r.orbit_radius_max_dev;
                row["initial_radius"] = r.initial_radius;
                row["residual"] = r.residual;
                row["degree"] = r.degree ? ojson(*r.degree) : ojson(nullptr);
                row["averaged_degree"] = r.averaged_degree ? ojson(*r.averaged_degree) : ojson(nullptr);
                row["h_status"] = r.h_status;
                row["inf_boundary"] = r.inf_boundary;
                row["margin_verdict"] = r.margin_verdict;
                std::string notes;
                for (const auto& n : r.notes) notes += (notes.empty() ? "" : "; ") + n;
                row["notes"] = notes;
                rows.push_back(std::move(row));
                all_certified = all_certified && r.orbit_status == "certified";
            }
            res.outputs["problem"] = problem_to_json(table.problem);
            res.outputs["r_max"] = table.margin.r_max;
            res.outputs["inf_increasing_as_eps_decreases"] = table.margin.inf_increasing_as_eps_decreases;
            res.outputs["rows"] = std::move(rows);
            if (!all_certified) {
                res.ok = false;
                res.error = "some eps rows have no certified periodic orbit";
            }
        }
        if (!res.ok) code = kFailure;
    } catch (const UsageError& e) {
        res.ok = false;
        res.error = e.what();
        code = kUsage;
    } catch (const ProblemError& e) {
        res.ok = false;
        res.error = e.what();
        code = kUsage;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
        code = kFailure;
    }

    if (!res.ok) {
        res.outputs["error"] = res.error;
        err << "pavg " << command << ": " << res.error << '\n';
    }
    const double elapsed =
        g.no_timing ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ojson report;
    report["command"] = command;
    report["inputs"] = res.inputs;
    report["outputs"] = res.outputs;
    report["status"] = res.ok ? "ok" : "error";
    report["timing_s"] = elapsed;

    std::ofstream file_out;
    std::ostream* sink = &out;
    if (!g.out.empty()) {
        file_out.open(g.out);
        if (!file_out) {
            err << "pavg: cannot open output file '" << g.out << "'\n";
            return kUsage;
        }
        sink = &file_out;
    }
    if (g.format == "csv")
        write_csv(*sink, report["outputs"]);
    else
        write_json(*sink, report);
    return code;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace pavg::cli
