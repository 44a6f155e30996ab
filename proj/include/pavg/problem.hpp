#pragma once

// Analysis problem: a T-periodic field expansion
//     x' = sum_{i=1..k} eps^i F_i(t, x) + eps^(k+1) R(t, x, eps),
// an open bounded domain V, and the eps range to examine.

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pavg/expr.hpp"

namespace pavg {

using Vec = std::vector<double>;

class ProblemError : public std::runtime_error {
public:
    enum class Kind { Io, Schema, Parse, Invariant };

    ProblemError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

struct Box {
    Vec lower;
    Vec upper;
};

struct Ball {
    Vec center;
    double radius = 1.0;
};

/// Planar annulus; in one dimension the pair of intervals
/// (c - r_outer, c - r_inner) and (c + r_inner, c + r_outer).
struct Annulus {
    Vec center;
    double r_inner = 0.0;
    double r_outer = 1.0;
};

using DomainSpec = std::variant<Box, Ball, Annulus>;

enum class Closure { Open, Closed };

inline int dimension(const DomainSpec& d) {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>)
                return static_cast<int>(s.lower.size());
            else
                return static_cast<int>(s.center.size());
        },
        d);
}

inline void validate(const DomainSpec& d) {
    auto bad = [](const std::string& m) { throw ProblemError(ProblemError::Kind::Invariant, m); };
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                if (s.lower.empty() || s.lower.size() != s.upper.size())
                    bad("box: lower and upper must be nonempty and of equal length");
                for (std::size_t i = 0; i < s.lower.size(); ++i)
                    if (!(s.lower[i] < s.upper[i]))
                        bad("box: lower[" + std::to_string(i) + "] must be < upper[" +
                            std::to_string(i) + "]");
            } else if constexpr (std::is_same_v<T, Ball>) {
                if (s.center.empty()) bad("ball: empty center");
                if (!(s.radius > 0)) bad("ball: radius must be > 0");
            } else {
                if (s.center.size() != 1 && s.center.size() != 2)
                    bad("annulus: center must have 2 components (or 1 for an interval pair)");
                if (!(s.r_inner >= 0)) bad("annulus: r_inner must be >= 0");
                if (!(s.r_outer > s.r_inner)) bad("annulus: r_outer must be > r_inner");
            }
        },
        d);
}

namespace detail {

inline void check_dim(const DomainSpec& d, std::span<const double> z) {
    if (static_cast<int>(z.size()) != dimension(d))
        throw std::invalid_argument("dimension mismatch: point has " + std::to_string(z.size()) +
                                    " components, domain has " + std::to_string(dimension(d)));
}

inline double dist_to(std::span<const double> z, const Vec& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (z[i] - c[i]) * (z[i] - c[i]);
    return std::sqrt(s);
}

}  // namespace detail

/// Strict membership in V for Closure::Open, membership in the closure otherwise.
inline bool domain_contains(const DomainSpec& d, std::span<const double> z, Closure mode) {
    detail::check_dim(d, z);
    const bool open = mode == Closure::Open;
    auto inside = [open](double lo, double v, double hi) {
        return open ? (lo < v && v < hi) : (lo <= v && v <= hi);
    };
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t i = 0; i < z.size(); ++i)
                    if (!inside(s.lower[i], z[i], s.upper[i])) return false;
                return true;
            } else {
                // Round boundaries cannot be hit exactly in floating point; a few
                // ulps of slack around each sphere counts as on the boundary.
                double scale = 0.0;
                for (double c : s.center) scale = std::max(scale, std::abs(c));
                const double r = detail::dist_to(z, s.center);
                if constexpr (std::is_same_v<T, Ball>) {
                    const double band = 16 * std::numeric_limits<double>::epsilon() * (scale + s.radius);
                    return open ? r < s.radius - band : r <= s.radius + band;
                } else {
                    const double band = 16 * std::numeric_limits<double>::epsilon() * (scale + s.r_outer);
                    return open ? (s.r_inner + band < r && r < s.r_outer - band)
                                : (s.r_inner - band <= r && r <= s.r_outer + band);
                }
            }
        },
        d);
}

/// Euclidean distance from z to the boundary of V.
inline double boundary_distance(const DomainSpec& d, std::span<const double> z) {
    detail::check_dim(d, z);
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                // Inside: nearest face. Outside: distance to the box.
                double out2 = 0.0, inner = INFINITY;
                bool outside = false;
                for (std::size_t i = 0; i < z.size(); ++i) {
                    const double below = s.lower[i] - z[i], above = z[i] - s.upper[i];
                    const double excess = std::max({below, above, 0.0});
                    if (excess > 0) outside = true;
                    out2 += excess * excess;
                    inner = std::min({inner, -below, -above});
                }
                return outside ? std::sqrt(out2) : inner + 0.0;
            } else if constexpr (std::is_same_v<T, Ball>) {
                return std::abs(detail::dist_to(z, s.center) - s.radius);
            } else {
                const double r = detail::dist_to(z, s.center);
                return std::min(std::abs(r - s.r_inner), std::abs(r - s.r_outer));
            }
        },
        d);
}

/// Distance from z to the closed set V̄ (zero inside).
inline double outside_distance(const DomainSpec& d, std::span<const double> z) {
    return domain_contains(d, z, Closure::Closed) ? 0.0 : boundary_distance(d, z);
}

inline Box bounding_box(const DomainSpec& d) {
    return std::visit(
        [](const auto& s) -> Box {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                return s;
            } else {
                double r;
                if constexpr (std::is_same_v<T, Ball>)
                    r = s.radius;
                else
                    r = s.r_outer;
                Box b{s.center, s.center};
                for (std::size_t i = 0; i < s.center.size(); ++i) {
                    b.lower[i] -= r;
                    b.upper[i] += r;
                }
                return b;
            }
        },
        d);
}

inline double diameter(const DomainSpec& d) {
    if (const auto* b = std::get_if<Box>(&d)) {
        double s = 0.0;
        for (std::size_t i = 0; i < b->lower.size(); ++i)
            s += (b->upper[i] - b->lower[i]) * (b->upper[i] - b->lower[i]);
        return std::sqrt(s);
    }
    if (const auto* b = std::get_if<Ball>(&d)) return 2 * b->radius;
    return 2 * std::get<Annulus>(d).r_outer;
}

/// True if the closed box [lo, hi] lies in V̄.
inline bool box_within_closure(const DomainSpec& d, const Vec& lo, const Vec& hi) {
    auto near_far = [&](const Vec& c) {
        double near2 = 0.0, far2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double a = lo[i] - c[i], b = hi[i] - c[i];
            const double nearest = (a <= 0 && b >= 0) ? 0.0 : std::min(std::abs(a), std::abs(b));
            const double farthest = std::max(std::abs(a), std::abs(b));
            near2 += nearest * nearest;
            far2 += farthest * farthest;
        }
        return std::pair{std::sqrt(near2), std::sqrt(far2)};
    };
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t i = 0; i < lo.size(); ++i)
                    if (lo[i] < s.lower[i] || hi[i] > s.upper[i]) return false;
                return true;
            } else if constexpr (std::is_same_v<T, Ball>) {
                return near_far(s.center).second <= s.radius;
            } else {
                const auto [nearest, farthest] = near_far(s.center);
                if (s.center.size() == 1) {
                    // Interval pair: the cell must sit inside one of the two pieces.
                    const double c = s.center[0];
                    const bool left = lo[0] >= c - s.r_outer && hi[0] <= c - s.r_inner;
                    const bool right = lo[0] >= c + s.r_inner && hi[0] <= c + s.r_outer;
                    return left || right;
                }
                return farthest <= s.r_outer && nearest >= s.r_inner;
            }
        },
        d);
}

struct BoundaryPoint {
    Vec point;
    Vec normal;  // outward unit normal
};

namespace detail {

inline std::vector<BoundaryPoint> circle_samples(const Vec& c, double r, int m, double orient) {
    std::vector<BoundaryPoint> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double a = 2 * std::numbers::pi * j / m;
        const double ca = std::cos(a), sa = std::sin(a);
        out.push_back({{c[0] + r * ca, c[1] + r * sa}, {orient * ca, orient * sa}});
    }
    return out;
}

// Points per unit of length so that spacing stays <= step.
inline int grid_count(double length, double step) {
    return std::max(2, static_cast<int>(std::ceil(length / step - 1e-12)) + 1);
}

inline void box_face_samples(const Box& b, double step, std::vector<BoundaryPoint>& out) {
    const std::size_t n = b.lower.size();
    for (std::size_t axis = 0; axis < n; ++axis) {
        std::vector<int> counts(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            if (i != axis) counts[i] = grid_count(b.upper[i] - b.lower[i], step);
        for (int side = 0; side < 2; ++side) {
            std::vector<int> idx(n, 0);
            for (;;) {
                BoundaryPoint p{Vec(n), Vec(n, 0.0)};
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == axis)
                        p.point[i] = side ? b.upper[i] : b.lower[i];
                    else
                        p.point[i] = b.lower[i] + (b.upper[i] - b.lower[i]) * idx[i] / (counts[i] - 1);
                }
                p.normal[axis] = side ? 1.0 : -1.0;
                out.push_back(std::move(p));
                std::size_t k = 0;
                while (k < n && ++idx[k] >= counts[k]) idx[k++] = 0;
                if (k == n) break;
            }
        }
    }
}

}  // namespace detail

/// Points covering ∂V with mesh size at most diam(V)/density, each paired with
/// its outward unit normal. density must be >= 4.
inline std::vector<BoundaryPoint> boundary_sample(const DomainSpec& d, int density) {
    if (density < 4) throw std::invalid_argument("boundary_sample: density must be >= 4");
    const int n = dimension(d);
    const double step = diameter(d) / density;
    std::vector<BoundaryPoint> out;

    if (const auto* b = std::get_if<Box>(&d)) {
        detail::box_face_samples(*b, step, out);
        return out;
    }
    if (const auto* b = std::get_if<Ball>(&d)) {
        const Vec& c = b->center;
        if (n == 1) return {{{c[0] - b->radius}, {-1.0}}, {{c[0] + b->radius}, {1.0}}};
        if (n == 2)
            return detail::circle_samples(c, b->radius,
                                          std::max(4, static_cast<int>(std::ceil(std::numbers::pi * density))), 1.0);
        if (n == 3) {
            // Latitude rings; meridian and ring spacing both <= step.
            const int rings = std::max(2, static_cast<int>(std::ceil(std::numbers::pi * density / 2))) + 1;
            for (int i = 0; i < rings; ++i) {
                const double phi = std::numbers::pi * i / (rings - 1);
                const double sp = std::sin(phi), cp = std::cos(phi);
                const int m = (i == 0 || i == rings - 1)
                                  ? 1
                                  : std::max(4, static_cast<int>(std::ceil(std::numbers::pi * density * sp)));
                for (int j = 0; j < m; ++j) {
                    const double a = 2 * std::numbers::pi * j / m;
                    Vec u{sp * std::cos(a), sp * std::sin(a), cp};
                    out.push_back({{c[0] + b->radius * u[0], c[1] + b->radius * u[1], c[2] + b->radius * u[2]}, u});
                }
            }
            return out;
        }
        // n >= 4: project a cube-surface grid onto the sphere. The projection
        // stretches distances by at most sqrt(n), so refine the cube grid.
        Box cube{Vec(static_cast<std::size_t>(n), -1.0), Vec(static_cast<std::size_t>(n), 1.0)};
        std::vector<BoundaryPoint> raw;
        detail::box_face_samples(cube, step / (b->radius * std::sqrt(static_cast<double>(n))), raw);
        for (auto& p : raw) {
            const double r = norm(p.point);
            Vec u(p.point.size());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.point[i] / r;
            Vec x(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) x[i] = c[i] + b->radius * u[i];
            out.push_back({std::move(x), std::move(u)});
        }
        return out;
    }
    const auto& a = std::get<Annulus>(d);
    if (n == 1) {
        const double c = a.center[0];
        return {{{c - a.r_outer}, {-1.0}},
                {{c - a.r_inner}, {1.0}},
                {{c + a.r_inner}, {-1.0}},
                {{c + a.r_outer}, {1.0}}};
    }
    out = detail::circle_samples(a.center, a.r_outer,
                                 std::max(4, static_cast<int>(std::ceil(std::numbers::pi * density))), 1.0);
    if (a.r_inner == 0.0) {
        out.push_back({a.center, {0.0, 0.0}});
    } else {
        const int m = std::max(4, static_cast<int>(std::ceil(std::numbers::pi * density * a.r_inner / a.r_outer)));
        auto inner = detail::circle_samples(a.center, a.r_inner, m, -1.0);
        out.insert(out.end(), inner.begin(), inner.end());
    }
    return out;
}

/// Regular grid of `per_axis` points per coordinate on the bounding box of V,
/// keeping the points of V̄.
inline std::vector<Vec> interior_grid(const DomainSpec& d, int per_axis) {
    const Box bb = bounding_box(d);
    const std::size_t n = bb.lower.size();
    per_axis = std::max(per_axis, 2);
    std::vector<Vec> out;
    std::vector<int> idx(n, 0);
    for (;;) {
        Vec z(n);
        for (std::size_t i = 0; i < n; ++i)
            z[i] = bb.lower[i] + (bb.upper[i] - bb.lower[i]) * idx[i] / (per_axis - 1);
        if (domain_contains(d, z, Closure::Closed)) out.push_back(std::move(z));
        std::size_t k = 0;
        while (k < n && ++idx[k] >= per_axis) idx[k++] = 0;
        if (k == n) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field expansion
// ---------------------------------------------------------------------------

/// Variable names visible to field components: t, x1..xn, and (remainder only) eps.
inline std::vector<std::string> variable_layout(int n) {
    std::vector<std::string> layout{"t"};
    for (int i = 1; i <= n; ++i) layout.push_back("x" + std::to_string(i));
    layout.push_back("eps");
    return layout;
}

class VectorFieldExpansion {
public:
    VectorFieldExpansion(int dimension, double period, std::vector<std::vector<Expression>> F,
                         std::vector<Expression> R = {})
        : n_(dimension), period_(period), F_(std::move(F)), R_(std::move(R)) {
        auto bad = [](const std::string& m) { throw ProblemError(ProblemError::Kind::Invariant, m); };
        if (n_ < 1) bad("dimension must be >= 1");
        if (!(period_ > 0) || !std::isfinite(period_)) bad("period must be > 0");
        if (F_.empty()) bad("order_k must be >= 1 (F has no entries)");
        if (R_.empty()) R_.assign(static_cast<std::size_t>(n_), Expression());
        if (static_cast<int>(R_.size()) != n_)
            bad("R must have " + std::to_string(n_) + " components");

        const auto layout = variable_layout(n_);
        const std::set<std::string> f_allowed(layout.begin(), layout.end() - 1);
        const std::set<std::string> r_allowed(layout.begin(), layout.end());
        for (std::size_t j = 0; j < F_.size(); ++j) {
            if (static_cast<int>(F_[j].size()) != n_)
                bad("F[" + std::to_string(j + 1) + "] must have " + std::to_string(n_) + " components");
            std::vector<Program> progs;
            for (std::size_t c = 0; c < F_[j].size(); ++c) {
                const auto v = check_bindings(F_[j][c], f_allowed);
                if (!v.empty()) bad(slot_name(j, c) + " uses variable(s) not allowed there: " + join(v));
                progs.push_back(Program::compile(F_[j][c], layout));
            }
            F_prog_.push_back(std::move(progs));
        }
        remainder_zero_ = true;
        for (std::size_t c = 0; c < R_.size(); ++c) {
            const auto v = check_bindings(R_[c], r_allowed);
            if (!v.empty())
                bad("R[" + std::to_string(c + 1) + "] uses variable(s) not allowed there: " + join(v));
            R_prog_.push_back(Program::compile(R_[c], layout));
            remainder_zero_ = remainder_zero_ && R_[c].is_zero_constant();
        }
    }

    int dimension() const noexcept { return n_; }
    double period() const noexcept { return period_; }
    int order() const noexcept { return static_cast<int>(F_.size()); }
    const std::vector<std::vector<Expression>>& F() const noexcept { return F_; }
    const std::vector<Expression>& R() const noexcept { return R_; }
    bool remainder_is_zero() const noexcept { return remainder_zero_; }

    /// F_j(t, x); j is 1-based.
    void eval_order(int j, double t, std::span<const double> x, std::span<double> out) const {
        Slots s(n_, t, x, 0.0);
        const auto& progs = F_prog_.at(static_cast<std::size_t>(j - 1));
        for (int c = 0; c < n_; ++c) out[c] = progs[c](s.view());
    }

    /// R(t, x, eps).
    void eval_remainder(double t, std::span<const double> x, double eps, std::span<double> out) const {
        if (remainder_zero_) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        Slots s(n_, t, x, eps);
        for (int c = 0; c < n_; ++c) out[c] = R_prog_[c](s.view());
    }

    /// F(t, x, eps) = sum_i eps^(i-1) F_i(t, x) + eps^k R(t, x, eps).
    /// At eps = 0 the remainder term vanishes and R is not evaluated.
    void eval_full(double t, std::span<const double> x, double eps, std::span<double> out) const {
        Slots s(n_, t, x, eps);
        std::fill(out.begin(), out.end(), 0.0);
        double w = 1.0;
        for (std::size_t j = 0; j < F_prog_.size(); ++j) {
            if (j == 0 || w != 0.0)
                for (int c = 0; c < n_; ++c) out[c] += w * F_prog_[j][c](s.view());
            w *= eps;
        }
        if (!remainder_zero_ && w != 0.0)
            for (int c = 0; c < n_; ++c) out[c] += w * R_prog_[c](s.view());
    }

    static std::string slot_name(std::size_t j, std::size_t c) {
        return "F[" + std::to_string(j + 1) + "][" + std::to_string(c + 1) + "]";
    }

private:
    // Variable slots [t, x1..xn, eps] on the stack for small n.
    class Slots {
    public:
        Slots(int n, double t, std::span<const double> x, double eps) : size_(static_cast<std::size_t>(n) + 2) {
            double* p = size_ <= inline_.size() ? inline_.data() : (heap_.resize(size_), heap_.data());
            p[0] = t;
            std::copy(x.begin(), x.end(), p + 1);
            p[size_ - 1] = eps;
            data_ = p;
        }
        std::span<const double> view() const { return {data_, size_}; }

    private:
        std::size_t size_;
        std::array<double, 12> inline_{};
        std::vector<double> heap_;
        double* data_ = nullptr;
    };

    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        return s;
    }

    int n_;
    double period_;
    std::vector<std::vector<Expression>> F_;
    std::vector<Expression> R_;
    std::vector<std::vector<Program>> F_prog_;
    std::vector<Program> R_prog_;
    bool remainder_zero_ = true;
};

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

struct Problem {
    VectorFieldExpansion field;
    DomainSpec domain;
    double eps_max;
    std::vector<double> eps_grid;
};

inline void validate(const Problem& p) {
    auto bad = [](const std::string& m) { throw ProblemError(ProblemError::Kind::Invariant, m); };
    validate(p.domain);
    if (dimension(p.domain) != p.field.dimension())
        bad("domain dimension " + std::to_string(dimension(p.domain)) + " does not match field dimension " +
            std::to_string(p.field.dimension()));
    if (std::holds_alternative<Annulus>(p.domain) && p.field.dimension() > 2)
        bad("annulus domains require dimension 1 or 2");
    if (!(p.eps_max > 0) || !std::isfinite(p.eps_max)) bad("eps_max must be > 0");
    for (std::size_t i = 0; i < p.eps_grid.size(); ++i) {
        const double e = p.eps_grid[i];
        if (!(e > 0 && e <= p.eps_max)) bad("eps_grid entries must lie in (0, eps_max]");
        if (i > 0 && !(e < p.eps_grid[i - 1])) bad("eps_grid must be strictly decreasing");
    }
}

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ProblemError(ProblemError::Kind::Schema, "missing field '" + std::string(key) + "'" + where);
    return *it;
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
            throw ProblemError(ProblemError::Kind::Schema, "unknown key '" + it.key() + "'" + where);
    }
}

inline double as_number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ProblemError(ProblemError::Kind::Schema, what + " must be a number");
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& what) {
    const double d = as_number(v, what);
    if (d != std::floor(d) || std::abs(d) > 1e9)
        throw ProblemError(ProblemError::Kind::Schema, what + " must be an integer");
    return static_cast<int>(d);
}

inline Vec as_vector(const json& v, const std::string& what) {
    if (!v.is_array()) throw ProblemError(ProblemError::Kind::Schema, what + " must be an array of numbers");
    Vec out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

inline Expression parse_slot(const json& v, const std::string& slot) {
    if (!v.is_string()) throw ProblemError(ProblemError::Kind::Schema, slot + " must be a string expression");
    try {
        return parse(v.get<std::string>());
    } catch (const ParseError& e) {
        throw ProblemError(ProblemError::Kind::Parse, "in " + slot + ": " + e.what());
    }
}

}  // namespace detail

inline DomainSpec domain_from_json(const nlohmann::json& j) {
    using detail::as_number;
    using detail::as_vector;
    const std::string where = " in 'domain'";
    if (!j.is_object()) throw ProblemError(ProblemError::Kind::Schema, "'domain' must be an object");
    const auto& type = detail::require(j, "type", where);
    if (!type.is_string()) throw ProblemError(ProblemError::Kind::Schema, "domain.type must be a string");
    const std::string t = type.get<std::string>();
    DomainSpec d;
    if (t == "box") {
        detail::reject_unknown(j, {"type", "lower", "upper"}, where);
        d = Box{as_vector(detail::require(j, "lower", where), "domain.lower"),
                as_vector(detail::require(j, "upper", where), "domain.upper")};
    } else if (t == "ball") {
        detail::reject_unknown(j, {"type", "center", "radius"}, where);
        d = Ball{as_vector(detail::require(j, "center", where), "domain.center"),
                 as_number(detail::require(j, "radius", where), "domain.radius")};
    } else if (t == "annulus") {
        detail::reject_unknown(j, {"type", "center", "r_inner", "r_outer"}, where);
        d = Annulus{as_vector(detail::require(j, "center", where), "domain.center"),
                    as_number(detail::require(j, "r_inner", where), "domain.r_inner"),
                    as_number(detail::require(j, "r_outer", where), "domain.r_outer")};
    } else {
        throw ProblemError(ProblemError::Kind::Schema, "unknown domain type '" + t + "'");
    }
    validate(d);
    return d;
}

inline nlohmann::ordered_json domain_to_json(const DomainSpec& d) {
    nlohmann::ordered_json j;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                j["type"] = "box";
                j["lower"] = s.lower;
                j["upper"] = s.upper;
            } else if constexpr (std::is_same_v<T, Ball>) {
                j["type"] = "ball";
                j["center"] = s.center;
                j["radius"] = s.radius;
            } else {
                j["type"] = "annulus";
                j["center"] = s.center;
                j["r_inner"] = s.r_inner;
                j["r_outer"] = s.r_outer;
            }
        },
        d);
    return j;
}

inline Problem problem_from_json(const nlohmann::json& j) {
    using detail::require;
    if (!j.is_object()) throw ProblemError(ProblemError::Kind::Schema, "problem file must hold a JSON object");
    detail::reject_unknown(j, {"dimension", "period", "order_k", "F", "R", "domain", "eps_max", "eps_grid"}, "");

    const int n = detail::as_int(require(j, "dimension", ""), "dimension");
    const double period = detail::as_number(require(j, "period", ""), "period");
    const int k = detail::as_int(require(j, "order_k", ""), "order_k");
    if (n < 1) throw ProblemError(ProblemError::Kind::Invariant, "dimension must be >= 1");
    if (k < 1) throw ProblemError(ProblemError::Kind::Invariant, "order_k must be >= 1");

    const auto& Fj = require(j, "F", "");
    if (!Fj.is_array() || static_cast<int>(Fj.size()) != k)
        throw ProblemError(ProblemError::Kind::Schema, "F must be an array of order_k = " + std::to_string(k) + " entries");
    std::vector<std::vector<Expression>> F;
    for (std::size_t i = 0; i < Fj.size(); ++i) {
        if (!Fj[i].is_array() || static_cast<int>(Fj[i].size()) != n)
            throw ProblemError(ProblemError::Kind::Schema,
                               "F[" + std::to_string(i + 1) + "] must be an array of " + std::to_string(n) + " strings");
        std::vector<Expression> comps;
        for (std::size_t c = 0; c < Fj[i].size(); ++c)
            comps.push_back(detail::parse_slot(Fj[i][c], VectorFieldExpansion::slot_name(i, c)));
        F.push_back(std::move(comps));
    }
    std::vector<Expression> R;
    if (auto it = j.find("R"); it != j.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != n)
            throw ProblemError(ProblemError::Kind::Schema, "R must be an array of " + std::to_string(n) + " strings");
        for (std::size_t c = 0; c < it->size(); ++c)
            R.push_back(detail::parse_slot((*it)[c], "R[" + std::to_string(c + 1) + "]"));
    }

    Problem p{VectorFieldExpansion(n, period, std::move(F), std::move(R)),
              domain_from_json(require(j, "domain", "")),
              detail::as_number(require(j, "eps_max", ""), "eps_max"),
              detail::as_vector(require(j, "eps_grid", ""), "eps_grid")};
    validate(p);
    return p;
}

inline Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProblemError(ProblemError::Kind::Io, "cannot open problem file '" + path + "' (file not found)");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ProblemError(ProblemError::Kind::Schema, "invalid JSON in '" + path + "': " + e.what());
    }
    return problem_from_json(j);
}

inline nlohmann::ordered_json problem_to_json(const Problem& p) {
    nlohmann::ordered_json j;
    j["dimension"] = p.field.dimension();
    j["period"] = p.field.period();
    j["order_k"] = p.field.order();
    auto F = nlohmann::ordered_json::array();
    for (const auto& order : p.field.F()) {
        auto comps = nlohmann::ordered_json::array();
        for (const auto& e : order) comps.push_back(to_string(e));
        F.push_back(std::move(comps));
    }
    j["F"] = std::move(F);
    auto R = nlohmann::ordered_json::array();
    for (const auto& e : p.field.R()) R.push_back(to_string(e));
    j["R"] = std::move(R);
    j["domain"] = domain_to_json(p.domain);
    j["eps_max"] = p.eps_max;
    j["eps_grid"] = p.eps_grid;
    return j;
}

}  // namespace pavg
