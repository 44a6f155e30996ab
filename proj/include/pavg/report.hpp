#pragma once

// Deterministic text output: JSON with 17 significant digits, CSV tables and
// whitespace-separated trajectory columns.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pavg/averaging.hpp"

#include "pavg/flow.hpp"

namespace pavg {

using ojson = nlohmann::ordered_json;

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_json(std::ostream& out, const ojson& j, int indent, int level) {
    const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * level), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << '{' << nl;
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out << ',' << nl;
                first = false;
                out << pad << ojson(key).dump() << (indent > 0 ? ": " : ":");
                write_json(out, value, indent, level + 1);
            }
            out << nl << close << '}';
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::none_of(j.begin(), j.end(), [](const ojson& v) { return v.is_structured(); });
            out << '[' << (flat ? "" : nl);
            bool first = true;
            for (const auto& v : j) {
                if (!first) out << ',' << (flat ? (indent > 0 ? " " : "") : nl);
                first = false;
                if (!flat) out << pad;
                write_json(out, v, indent, level + 1);
            }
            out << (flat ? "" : nl) << (flat ? "" : close) << ']';
            return;
        }
        case ojson::value_t::number_float:
            out << format_double(j.get<double>());
            return;
        default:
            out << j.dump();
    }
}

}  // namespace detail

inline void write_json(std::ostream& out, const ojson& j, int indent = 2) {
    detail::write_json(out, j, indent, 0);
    out << '\n';
}

inline std::string dump_json(const ojson& j, int indent = 2) {
    std::ostringstream s;
    write_json(s, j, indent);
    return s.str();
}

namespace detail {

inline std::string csv_cell(const ojson& v) {
    std::string s;
    if (v.is_null()) return "";
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) {
        s = v.get<std::string>();
    } else if (v.is_array() && std::none_of(v.begin(), v.end(), [](const ojson& x) { return x.is_structured(); })) {
        for (const auto& x : v) s += (s.empty() ? "" : " ") + csv_cell(x);
    } else {
        s = v.dump();
    }
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline void flatten(const ojson& j, const std::string& prefix, std::vector<std::pair<std::string, ojson>>& out) {
    if (j.is_object() && !j.empty()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array() && std::any_of(j.begin(), j.end(), [](const ojson& x) { return x.is_structured(); })) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out.emplace_back(prefix, j);
    }
}

}  // namespace detail

/// CSV view of an outputs payload: the array under "rows" becomes a table
/// (columns from the first row, nested values flattened); anything else is
/// written as key,value pairs.
inline void write_csv(std::ostream& out, const ojson& outputs) {
    auto it = outputs.find("rows");
    if (it != outputs.end() && it->is_array() && !it->empty() && it->front().is_object()) {
        std::vector<std::string> header;
        for (const auto& [k, v] : it->front().items()) header.push_back(k);
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << detail::csv_cell(header[i]);
        out << '\n';
        for (const auto& row : *it) {
            for (std::size_t i = 0; i < header.size(); ++i) {
                auto c = row.find(header[i]);
                out << (i ? "," : "") << (c == row.end() ? "" : detail::csv_cell(*c));
            }
            out << '\n';
        }
        return;
    }
    std::vector<std::pair<std::string, ojson>> flat;
    detail::flatten(outputs, "", flat);
    out << "key,value\n";
    for (const auto& [k, v] : flat) out << detail::csv_cell(k) << ',' << detail::csv_cell(v) << '\n';
}

/// One line per stored state: t x1 ... xn.
inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out << format_double(traj.times[i]);
        for (double x : traj.states[i]) out << ' ' << format_double(x);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON views of result types
// ---------------------------------------------------------------------------

inline ojson to_json(const DegreeCertificate& c) {
    ojson j;
    j["degree"] = c.degree;
    j["min_boundary_modulus"] = c.min_boundary_modulus;
    j["samples_used"] = c.samples_used;
    j["refinement_depth"] = c.refinement_depth;
    j["rigorous"] = c.rigorous;
    return j;
}

inline ojson to_json(const AveragingReport& r) {
    ojson j;
    j["value"] = r.value;
    j["nodes_used"] = r.nodes_used;
    j["est_error"] = r.est_error;
    j["converged"] = r.converged;
    return j;
}

inline ojson to_json(const OrbitResult& r) {
    ojson j;
    j["status"] = to_string(r.status);
    j["eps"] = r.eps;
    j["lambda"] = r.lambda;
    j["phase"] = r.phase;
    j["initial_point"] = r.initial_point;
    j["residual"] = r.residual;
    j["certificate"] = r.certificate ? to_json(*r.certificate) : ojson(nullptr);
    j["domain_stat"] = r.domain_stat;
    j["map_evaluations"] = r.map_evaluations;
    j["trajectory_points"] = r.trajectory.times.size();
    j["note"] = r.note;
    return j;
}

inline ojson to_json(const HFalsifierReport& r) {
    ojson j;
    ojson grid;
    grid["eps_count"] = r.eps_count;
    grid["lambda_count"] = r.lambda_count;
    grid["seed_count"] = r.seed_count;
    grid["phase_count"] = r.phase_count;
    grid["steps"] = r.steps;
    grid["contact_tol"] = r.contact_tol;
    j["grid"] = std::move(grid);
    j["trials"] = r.trials;
    j["orbits_found"] = r.orbits_found;
    j["not_converged"] = r.not_converged;
    j["failures"] = r.failures;
    auto rows = ojson::array();
    for (const auto& c : r.counterexamples) {
        ojson row;
        row["eps"] = c.eps;
        row["lambda"] = c.lambda;
        row["initial_point"] = c.initial_point;
        row["residual"] = c.residual;
        row["boundary_contact_time"] = c.boundary_contact_time;
        row["min_boundary_distance"] = c.min_boundary_distance;
        row["certified"] = c.certified;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["status"] = r.status;
    return j;
}

inline ojson to_json(const MarginReport& r) {
    ojson j;
    auto rows = ojson::array();
    for (std::size_t i = 0; i < r.eps_list.size(); ++i) {
        ojson row;
        row["eps"] = r.eps_list[i];
        row["inf_boundary"] = r.inf_boundary[i];
        row["r_max"] = r.r_max;
        row["verdict"] = to_string(r.verdict[i]);
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["r_max"] = r.r_max;
    j["inf_increasing_as_eps_decreases"] = r.inf_increasing_as_eps_decreases;
    ojson sampling;
    sampling["interior_points"] = r.interior_points;
    sampling["eps_samples"] = r.eps_samples;
    sampling["boundary_points"] = r.boundary_points;
    sampling["eps_max"] = r.eps_max;
    j["sampling"] = std::move(sampling);
    return j;
}

inline ojson to_json(const std::vector<BoundaryCheckEntry>& entries) {
    ojson j;
    auto rows = ojson::array();
    bool all = !entries.empty();
    for (const auto& e : entries) {
        ojson row;
        row["eps"] = e.eps;
        row["min_modulus"] = e.min_modulus;
        row["argmin"] = e.argmin;
        row["pass"] = e.pass;
        row["inconclusive"] = e.inconclusive;
        row["samples"] = e.samples;
        rows.push_back(std::move(row));
        all = all && e.pass;
    }
    j["rows"] = std::move(rows);
    j["all_pass"] = all;
    return j;
}

}  // namespace pavg
