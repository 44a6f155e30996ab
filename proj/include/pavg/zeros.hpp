#pragma once

// Localization of zeros of the leading averaged function by uniform
// subdivision of V and a degree per cell.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pavg/averaging.hpp"
#include "pavg/degree.hpp"
#include "pavg/parallel.hpp"
#include "pavg/problem.hpp"

namespace pavg {

struct ZerosOptions {
    int depth = 10;  // total number of bisections, cycling through the axes
    std::optional<int> order;  // averaged order to analyse; default: leading order
    double threshold = kDefaultZeroThreshold;
    double tol = kDefaultAveragingTol;
    int jobs = 1;
    DegreeOptions degree{8, 24, kBoundaryZeroTol};
};

struct ZeroCluster {
    Box box;          // bounding box of the merged cells
    Vec estimate;     // box center
    int cells = 0;
    std::optional<int> degree;
    bool certified = false;  // nonzero degree on the merged box
    std::string note;
};

struct ZerosReport {
    int order = 0;
    int depth = 0;
    std::vector<int> splits;  // bisections per axis
    long cells_total = 0;
    long cells_in_domain = 0;
    long cells_flagged = 0;
    std::vector<ZeroCluster> zeros;
};

namespace detail {

inline Box cell_box(const Box& outer, const std::vector<int>& counts, const std::vector<int>& index) {
    Box b{outer.lower, outer.upper};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double w = (outer.upper[i] - outer.lower[i]) / counts[i];
        b.lower[i] = outer.lower[i] + index[i] * w;
        b.upper[i] = index[i] + 1 == counts[i] ? outer.upper[i] : outer.lower[i] + (index[i] + 1) * w;
    }
    return b;
}

}  // namespace detail

/// Splits the bounding box of V into 2^depth congruent cells, keeps those
/// inside V̄ and computes the degree of f_ℓ on each. Cells with nonzero or
/// undefined degree (a zero on a cell face) are merged into face- or
/// corner-adjacent clusters, and each cluster is re-examined on its bounding
/// box. Pairs of zeros with opposite index inside one cell cancel and are
/// missed.
inline ZerosReport locate_zeros(const VectorFieldExpansion& field, const DomainSpec& domain,
                                const ZerosOptions& opt = {}) {
    if (opt.depth < 0 || opt.depth > 24) throw std::invalid_argument("locate_zeros: depth must lie in [0, 24]");
    const int n = field.dimension();
    if (n != dimension(domain)) throw std::invalid_argument("locate_zeros: domain dimension mismatch");

    ZerosReport rep;
    rep.depth = opt.depth;
    if (opt.order) {
        rep.order = *opt.order;
    } else {
        const auto lead = detect_leading_order(field, interior_grid(domain, 8), opt.threshold, opt.tol);
        if (!lead) throw std::runtime_error("no averaged order is nonzero on the sample grid");
        rep.order = *lead;
    }
    if (rep.order < 1 || rep.order > field.order())
        throw std::invalid_argument("locate_zeros: order must lie in [1, " + std::to_string(field.order()) + "]");

    const int order = rep.order;
    auto f = [&](const Vec& z) { return average_order_j(field, order, z, opt.tol).value; };

    const Box outer = bounding_box(domain);
    std::vector<int> counts(static_cast<std::size_t>(n), 1);
    rep.splits.assign(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < opt.depth; ++s) {
        ++rep.splits[static_cast<std::size_t>(s % n)];
        counts[static_cast<std::size_t>(s % n)] *= 2;
    }

    std::vector<std::vector<int>> cells;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (long c = 0;; ++c) {
        ++rep.cells_total;
        const Box b = detail::cell_box(outer, counts, idx);
        if (box_within_closure(domain, b.lower, b.upper)) cells.push_back(idx);
        std::size_t a = 0;
        while (a < idx.size() && ++idx[a] == counts[a]) idx[a++] = 0;
        if (a == idx.size()) break;
    }
    rep.cells_in_domain = static_cast<long>(cells.size());

    // 0: degree zero, 1: nonzero, 2: undefined
    std::vector<int> state(cells.size(), 0);
    parallel_for(cells.size(), opt.jobs, [&](std::size_t i) {
        const Box b = detail::cell_box(outer, counts, cells[i]);
        try {
            state[i] = degree_of_map(f, DomainSpec{b}, opt.degree).degree != 0 ? 1 : 0;
        } catch (const DegreeError&) {
            state[i] = 2;
        }
    });

    std::map<std::vector<int>, std::size_t> flagged;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (state[i] != 0) flagged.emplace(cells[i], i);
    rep.cells_flagged = static_cast<long>(flagged.size());

    // Connected components under the king-move adjacency, in index order.
    std::map<std::vector<int>, int> component;
    std::vector<std::vector<std::vector<int>>> groups;
    for (const auto& [key, unused] : flagged) {
        if (component.contains(key)) continue;
        const int id = static_cast<int>(groups.size());
        groups.emplace_back();
        std::vector<std::vector<int>> queue{key};
        component[key] = id;
        while (!queue.empty()) {
            auto cur = std::move(queue.back());
            queue.pop_back();
            groups[static_cast<std::size_t>(id)].push_back(cur);
            std::vector<int> off(static_cast<std::size_t>(n), -1);
            for (;;) {
                std::vector<int> nb = cur;
                bool zero = true;
                for (int a = 0; a < n; ++a) {
                    nb[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
                    zero = zero && off[static_cast<std::size_t>(a)] == 0;
                }
                if (!zero && flagged.contains(nb) && !component.contains(nb)) {
                    component[nb] = id;
                    queue.push_back(nb);
                }
                std::size_t a = 0;
                while (a < off.size() && ++off[a] == 2) off[a++] = -1;
                if (a == off.size()) break;
            }
        }
    }

    std::vector<ZeroCluster> clusters(groups.size());
    parallel_for(groups.size(), opt.jobs, [&](std::size_t g) {
        ZeroCluster& cl = clusters[g];
        cl.cells = static_cast<int>(groups[g].size());
        Box b = detail::cell_box(outer, counts, groups[g].front());
        for (const auto& c : groups[g]) {
            const Box cb = detail::cell_box(outer, counts, c);
            for (int a = 0; a < n; ++a) {
                b.lower[a] = std::min(b.lower[a], cb.lower[a]);
                b.upper[a] = std::max(b.upper[a], cb.upper[a]);
            }
        }
        cl.box = b;
        cl.estimate.resize(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) cl.estimate[a] = 0.5 * (b.lower[a] + b.upper[a]);
        try {
            cl.degree = degree_of_map(f, DomainSpec{b}, opt.degree).degree;
            cl.certified = *cl.degree != 0;
            if (!cl.certified) cl.note = "merged cells have total degree 0";
        } catch (const DegreeError& e) {
            cl.note = std::string("degree undefined on the merged box: ") + e.what();
        }
    });
    rep.zeros = std::move(clusters);
    return rep;
}

}  // namespace pavg
