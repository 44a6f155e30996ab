#pragma once

// Brouwer degree d_B(g, V, 0) of continuous maps on boxes, balls and annuli in
// dimension <= 3, computed from boundary samples with adaptive refinement.
//
// The result is numerical evidence, not proof: without a modulus of
// continuity for g nothing rules out a sign change between samples. The
// certificate therefore always has rigorous = false and records the smallest
// boundary modulus and the refinement depth it needed.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pavg/problem.hpp"

namespace pavg {

struct DegreeCertificate {
    int degree = 0;
    double min_boundary_modulus = 0.0;
    long samples_used = 0;
    int refinement_depth = 0;
    bool rigorous = false;
};

class DegreeError : public std::runtime_error {
public:
    enum class Kind { BoundaryZero, RefinementFailed, UnsupportedDimension, InvalidArgument };

    DegreeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr double kBoundaryZeroTol = 1e-14;

struct DegreeOptions {
    int init_density = 16;
    int max_depth = 24;
    double zero_tol = kBoundaryZeroTol;
};

/// Any callable Vec(const Vec&).
using VectorMap = std::function<Vec(const Vec&)>;

// ---------------------------------------------------------------------------
// n = 1
// ---------------------------------------------------------------------------

template <class ScalarMap>
DegreeCertificate degree_interval(ScalarMap&& g, double a, double b, double zero_tol = kBoundaryZeroTol) {
    if (!(a < b)) throw DegreeError(DegreeError::Kind::InvalidArgument, "degree_interval: need a < b");
    const double ga = g(a), gb = g(b);
    if (!(std::abs(ga) >= zero_tol) || !(std::abs(gb) >= zero_tol))
        throw DegreeError(DegreeError::Kind::BoundaryZero, "degree undefined on boundary");
    const int sa = ga > 0 ? 1 : -1, sb = gb > 0 ? 1 : -1;
    return {(sb - sa) / 2, std::min(std::abs(ga), std::abs(gb)), 2, 0, false};
}

// ---------------------------------------------------------------------------
// n = 2: winding number along the oriented boundary
// ---------------------------------------------------------------------------

namespace detail {

// Closed boundary curve s in [0, 1) -> point, traversed with V on the left.
struct PlanarCurve {
    std::function<Vec(double)> at;
    int segments;
};

inline std::vector<PlanarCurve> planar_boundary(const DomainSpec& d, int density) {
    auto circle = [](Vec c, double r, double orient) {
        return [c = std::move(c), r, orient](double s) {
            const double a = orient * 2 * std::numbers::pi * s;
            return Vec{c[0] + r * std::cos(a), c[1] + r * std::sin(a)};
        };
    };
    const int ring = std::max(8, static_cast<int>(std::ceil(std::numbers::pi * density)));
    if (const auto* b = std::get_if<Box>(&d)) {
        const Vec lo = b->lower, hi = b->upper;
        auto rect = [lo, hi](double s) {
            const double u = 4 * s;
            const int side = std::min(3, static_cast<int>(u));
            const double f = u - side;
            switch (side) {
                case 0: return Vec{lo[0] + f * (hi[0] - lo[0]), lo[1]};
                case 1: return Vec{hi[0], lo[1] + f * (hi[1] - lo[1])};
                case 2: return Vec{hi[0] - f * (hi[0] - lo[0]), hi[1]};
                default: return Vec{lo[0], hi[1] - f * (hi[1] - lo[1])};
            }
        };
        return {{rect, 4 * std::max(density, 2)}};
    }
    if (const auto* b = std::get_if<Ball>(&d)) return {{circle(b->center, b->radius, 1.0), ring}};
    const auto& a = std::get<Annulus>(d);
    if (a.r_inner == 0.0)
        throw DegreeError(DegreeError::Kind::InvalidArgument, "annulus with r_inner = 0 has a point boundary");
    return {{circle(a.center, a.r_outer, 1.0), ring},
            {circle(a.center, a.r_inner, -1.0),
             std::max(8, static_cast<int>(std::ceil(ring * a.r_inner / a.r_outer)))}};
}

struct Tally {
    double min_modulus = INFINITY;
    long samples = 0;
    int depth = 0;
};

template <class Map>
Vec sample_map(Map& g, const Vec& z, Tally& tally, double zero_tol) {
    Vec v = g(z);
    ++tally.samples;
    const double m = norm(v);
    if (!(m >= zero_tol))
        throw DegreeError(DegreeError::Kind::BoundaryZero, "map vanishes (|g| < " + std::to_string(zero_tol) +
                                                               ") at a boundary sample: degree undefined");
    tally.min_modulus = std::min(tally.min_modulus, m);
    return v;
}

}  // namespace detail

/// Winding number of g along ∂V. Any segment whose image turns by >= pi/2 is
/// bisected until every increment is below pi/2.
template <class Map>
DegreeCertificate degree_winding(Map&& g, const DomainSpec& domain, const DegreeOptions& opt = {}) {
    if (dimension(domain) != 2)
        throw DegreeError(DegreeError::Kind::InvalidArgument, "degree_winding needs a planar domain");
    detail::Tally tally;
    double total = 0.0;

    auto increment = [](const Vec& a, const Vec& b) {
        return std::atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]);
    };
    for (const auto& curve : detail::planar_boundary(domain, opt.init_density)) {
        struct Piece { double s0, s1; Vec g0, g1; int depth; };
        const Vec first = detail::sample_map(g, curve.at(0.0), tally, opt.zero_tol);
        Vec prev = first;
        for (int i = 0; i < curve.segments; ++i) {
            const double s0 = static_cast<double>(i) / curve.segments;
            const double s1 = static_cast<double>(i + 1) / curve.segments;
            Vec next = (i + 1 == curve.segments) ? first : detail::sample_map(g, curve.at(s1), tally, opt.zero_tol);
            std::vector<Piece> stack{{s0, s1, prev, next, 0}};
            while (!stack.empty()) {
                Piece p = std::move(stack.back());
                stack.pop_back();
                const double dtheta = increment(p.g0, p.g1);
                if (std::abs(dtheta) < std::numbers::pi / 2) {
                    total += dtheta;
                    continue;
                }
                if (p.depth >= opt.max_depth)
                    throw DegreeError(DegreeError::Kind::RefinementFailed, "refinement failed, possible boundary zero");
                const double sm = 0.5 * (p.s0 + p.s1);
                Vec gm = detail::sample_map(g, curve.at(sm), tally, opt.zero_tol);
                tally.depth = std::max(tally.depth, p.depth + 1);
                stack.push_back({sm, p.s1, gm, p.g1, p.depth + 1});
                stack.push_back({p.s0, sm, p.g0, std::move(gm), p.depth + 1});
            }
            prev = std::move(next);
        }
    }
    return {static_cast<int>(std::lround(total / (2 * std::numbers::pi))), tally.min_modulus, tally.samples,
            tally.depth, false};
}

// ---------------------------------------------------------------------------
// n = 3: signed solid angle of the image of ∂V
// ---------------------------------------------------------------------------

namespace detail {

using P3 = std::array<double, 3>;

inline P3 cross(const P3& a, const P3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot(const P3& a, const P3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double length(const P3& a) { return std::sqrt(dot(a, a)); }

inline double arc(const P3& a, const P3& b) { return std::atan2(length(cross(a, b)), dot(a, b)); }

/// Signed area of the spherical triangle (a, b, c) of unit vectors: l'Huilier's
/// formula for the spherical excess, sign from the triple product.
inline double signed_spherical_area(const P3& a, const P3& b, const P3& c) {
    const double la = arc(b, c), lb = arc(c, a), lc = arc(a, b);
    const double s = 0.5 * (la + lb + lc);
    const double t = std::tan(0.5 * s) * std::tan(0.5 * std::max(0.0, s - la)) *
                     std::tan(0.5 * std::max(0.0, s - lb)) * std::tan(0.5 * std::max(0.0, s - lc));
    const double excess = 4.0 * std::atan(std::sqrt(std::max(0.0, t)));
    const double triple = dot(a, cross(b, c));
    return triple > 0 ? excess : (triple < 0 ? -excess : 0.0);
}

// Surface triangles of the cube [-1,1]^3, counter-clockwise seen from outside.
inline std::vector<std::array<P3, 3>> cube_triangles(int m) {
    std::vector<std::array<P3, 3>> tris;
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        for (int side : {-1, 1}) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) {
                    auto pt = [&](int a, int b) {
                        P3 p{};
                        p[axis] = side;
                        p[u] = -1.0 + 2.0 * a / m;
                        p[v] = -1.0 + 2.0 * b / m;
                        return p;
                    };
                    const P3 p00 = pt(i, j), p10 = pt(i + 1, j), p11 = pt(i + 1, j + 1), p01 = pt(i, j + 1);
                    if (side > 0) {
                        tris.push_back({p00, p10, p11});
                        tris.push_back({p00, p11, p01});
                    } else {
                        tris.push_back({p00, p11, p10});
                        tris.push_back({p00, p01, p11});
                    }
                }
            }
        }
    }
    return tris;
}

}  // namespace detail

/// Degree in R^3 as (signed area of g/|g| over the triangulated ∂V) / 4π.
/// Triangles whose image has a side >= 0.5 are split in four.
template <class Map>
DegreeCertificate degree_solid_angle(Map&& g, const DomainSpec& domain, const DegreeOptions& opt = {}) {
    using detail::P3;
    if (dimension(domain) != 3 || std::holds_alternative<Annulus>(domain))
        throw DegreeError(DegreeError::Kind::InvalidArgument, "degree_solid_angle needs a 3D box or ball");

    std::function<Vec(const P3&)> embed;
    if (const auto* b = std::get_if<Box>(&domain)) {
        embed = [lo = b->lower, hi = b->upper](const P3& p) {
            Vec z(3);
            for (int i = 0; i < 3; ++i) z[i] = lo[i] + 0.5 * (p[i] + 1.0) * (hi[i] - lo[i]);
            return z;
        };
    } else {
        const auto& ball = std::get<Ball>(domain);
        embed = [c = ball.center, r = ball.radius](const P3& p) {
            const double l = detail::length(p);
            Vec z(3);
            for (int i = 0; i < 3; ++i) z[i] = c[i] + r * p[i] / l;
            return z;
        };
    }

    detail::Tally tally;
    auto unit_image = [&](const P3& p) {
        const Vec v = detail::sample_map(g, embed(p), tally, opt.zero_tol);
        const double l = norm(v);
        return P3{v[0] / l, v[1] / l, v[2] / l};
    };
    auto mid = [](const P3& a, const P3& b) { return P3{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])}; };
    auto gap = [](const P3& a, const P3& b) {
        return detail::length(P3{a[0] - b[0], a[1] - b[1], a[2] - b[2]});
    };

    struct Tri { std::array<P3, 3> param; std::array<P3, 3> image; int depth; };
    double total = 0.0;
    std::vector<Tri> stack;
    for (const auto& t : detail::cube_triangles(std::max(1, opt.init_density / 2))) {
        stack.push_back({t, {unit_image(t[0]), unit_image(t[1]), unit_image(t[2])}, 0});
        while (!stack.empty()) {
            Tri tri = std::move(stack.back());
            stack.pop_back();
            const auto& im = tri.image;
            const double diam = std::max({gap(im[0], im[1]), gap(im[1], im[2]), gap(im[2], im[0])});
            if (diam < 0.5) {
                total += detail::signed_spherical_area(im[0], im[1], im[2]);
                continue;
            }
            if (tri.depth >= opt.max_depth)
                throw DegreeError(DegreeError::Kind::RefinementFailed, "refinement failed, possible boundary zero");
            tally.depth = std::max(tally.depth, tri.depth + 1);
            const auto& p = tri.param;
            const P3 m01 = mid(p[0], p[1]), m12 = mid(p[1], p[2]), m20 = mid(p[2], p[0]);
            const P3 i01 = unit_image(m01), i12 = unit_image(m12), i20 = unit_image(m20);
            const int d = tri.depth + 1;
            stack.push_back({{p[0], m01, m20}, {im[0], i01, i20}, d});
            stack.push_back({{m01, p[1], m12}, {i01, im[1], i12}, d});
            stack.push_back({{m20, m12, p[2]}, {i20, i12, im[2]}, d});
            stack.push_back({{m01, m12, m20}, {i01, i12, i20}, d});
        }
    }
    return {static_cast<int>(std::lround(total / (4 * std::numbers::pi))), tally.min_modulus, tally.samples,
            tally.depth, false};
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Degree of g: V̄ -> R^n for n <= 3. In one dimension an annulus is a pair of
/// intervals and the degrees add.
template <class Map>
DegreeCertificate degree_of_map(Map&& g, const DomainSpec& domain, const DegreeOptions& opt = {}) {
    const int n = dimension(domain);
    if (n > 3)
        throw DegreeError(DegreeError::Kind::UnsupportedDimension,
                          "degree computation supports n <= 3, got n = " + std::to_string(n));
    if (n == 1) {
        auto scalar = [&](double x) { return g(Vec{x})[0]; };
        auto interval = [&](double a, double b) { return degree_interval(scalar, a, b, opt.zero_tol); };
        if (const auto* b = std::get_if<Box>(&domain)) return interval(b->lower[0], b->upper[0]);
        if (const auto* b = std::get_if<Ball>(&domain))
            return interval(b->center[0] - b->radius, b->center[0] + b->radius);
        const auto& a = std::get<Annulus>(domain);
        const double c = a.center[0];
        if (a.r_inner == 0.0)
            throw DegreeError(DegreeError::Kind::InvalidArgument, "interval pair with r_inner = 0 is not open");
        auto left = interval(c - a.r_outer, c - a.r_inner);
        auto right = interval(c + a.r_inner, c + a.r_outer);
        return {left.degree + right.degree, std::min(left.min_boundary_modulus, right.min_boundary_modulus),
                left.samples_used + right.samples_used, 0, false};
    }
    if (n == 2) return degree_winding(g, domain, opt);
    return degree_solid_angle(g, domain, opt);
}

// ---------------------------------------------------------------------------
// Invariance under small perturbations
// ---------------------------------------------------------------------------

struct InvarianceEntry {
    double eps = 0.0;
    bool skipped = false;
    std::string note;
    double min_boundary_g = 0.0;  // min over sampled ∂V of |g(z, eps)|
    double bound = 0.0;           // sampled max |r| times eps^(kappa+1)
    int degree_g = 0;
    int degree_perturbed = 0;
    bool equal = false;
};

struct InvarianceOptions {
    int boundary_density = 32;
    int interior_per_axis = 16;
    int eps_samples = 8;
    DegreeOptions degree{};
};

/// For g(z, eps) and bounded r(z, eps): whenever |g| > R eps^(kappa+1) on the
/// sampled boundary (R the sampled max of |r| over V̄ × [0, max eps]), the
/// degrees of g and g + eps^(kappa+1) r are computed and compared.
template <class FamilyG, class FamilyR>
std::vector<InvarianceEntry> perturbation_invariance_check(FamilyG&& g, FamilyR&& r, int kappa,
                                                           const DomainSpec& domain,
                                                           const std::vector<double>& eps_grid,
                                                           const InvarianceOptions& opt = {}) {
    std::vector<InvarianceEntry> out;
    if (eps_grid.empty()) return out;
    const double eps_top = *std::max_element(eps_grid.begin(), eps_grid.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); });
    auto points = interior_grid(domain, opt.interior_per_axis);
    const auto boundary = boundary_sample(domain, opt.boundary_density);
    for (const auto& b : boundary) points.push_back(b.point);
    double R = 0.0;
    for (const auto& z : points)
        for (int i = 0; i <= opt.eps_samples; ++i) R = std::max(R, norm(r(z, eps_top * i / opt.eps_samples)));

    for (double eps : eps_grid) {
        InvarianceEntry e;
        e.eps = eps;
        e.bound = R * std::pow(std::abs(eps), kappa + 1);
        e.min_boundary_g = INFINITY;
        for (const auto& b : boundary) e.min_boundary_g = std::min(e.min_boundary_g, norm(g(b.point, eps)));
        if (!(e.min_boundary_g > e.bound)) {
            e.skipped = true;
            e.note = "boundary margin precondition fails: min |g| on boundary <= R eps^(kappa+1)";
            out.push_back(std::move(e));
            continue;
        }
        const double w = std::pow(eps, kappa + 1);
        try {
            e.degree_g = degree_of_map([&](const Vec& z) { return g(z, eps); }, domain, opt.degree).degree;
            e.degree_perturbed = degree_of_map(
                                     [&](const Vec& z) {
                                         Vec v = g(z, eps);
                                         const Vec p = r(z, eps);
                                         for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * p[i];
                                         return v;
                                     },
                                     domain, opt.degree)
                                     .degree;
            e.equal = e.degree_g == e.degree_perturbed;
        } catch (const DegreeError& err) {
            e.skipped = true;
            e.note = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace pavg
