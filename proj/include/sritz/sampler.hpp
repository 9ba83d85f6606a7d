#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"
#include "sritz/rng.hpp"

namespace sritz {

/// Training (or testing) points for one evaluation of the discrete energy.
struct SampleBatch {
    PointSet domain;     // x^i in Omega
    PointSet interface;  // x^j on Gamma
    PointSet boundary;   // x^k on dOmega
    double vol_domain = 0.0;
    double vol_interface = 0.0;
    double vol_boundary = 0.0;
};

/// Requested point counts (M, M_Gamma, M_b).
struct BatchSizes {
    std::size_t domain = 0;
    std::size_t interface = 0;
    std::size_t boundary = 0;
    bool operator==(const BatchSizes&) const = default;
};

/// Surface point count matched to M domain points in a d-ball by the volume to
/// surface ratio R^d : d R^{d-1} with R = M^{1/d}.
inline std::size_t ball_surface_count(std::size_t domain_points, int dim) {
    const double r = std::pow(static_cast<double>(domain_points), 1.0 / dim);
    return static_cast<std::size_t>(std::llround(dim * std::pow(r, dim - 1)));
}

namespace detail {

inline constexpr double min_acceptance = 0.01;

/// Counts rejection attempts and fails once the acceptance rate is hopeless.
struct RejectionGuard {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    void step(bool ok) {
        ++attempts;
        accepted += ok ? 1 : 0;
        if (attempts >= 10000 && static_cast<double>(accepted) < min_acceptance * static_cast<double>(attempts))
            throw ConfigError("rejection sampling acceptance rate below 1%: check the geometry configuration");
    }
};

inline void gaussian_direction(Rng& rng, std::span<double> out) {
    double len2 = 0.0;
    do {
        len2 = 0.0;
        for (auto& v : out) {
            v = rng.normal();
            len2 += v * v;
        }
    } while (len2 == 0.0);
    const double inv = 1.0 / std::sqrt(len2);
    for (auto& v : out) v *= inv;
}

inline void require_count(std::size_t n, const char* what) {
    if (n < 1) throw ConfigError(std::string(what) + ": at least one point is required");
}

/// Cumulative arclength table of a closed planar curve, used to place nodes
/// equally spaced in arclength.
template <typename Speed>
std::vector<double> arclength_table(Speed speed, std::size_t n) {
    std::vector<double> s(n + 1, 0.0);
    const double h = 2.0 * pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = h * static_cast<double>(i);
        // Simpson on each cell
        s[i + 1] = s[i] + h / 6.0 * (speed(t0) + 4.0 * speed(t0 + 0.5 * h) + speed(t0 + h));
    }
    return s;
}

inline double invert_arclength(const std::vector<double>& table, double target) {
    const std::size_t n = table.size() - 1;
    const auto it = std::upper_bound(table.begin(), table.end(), target);
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - table.begin() - 1, 0), n - 1);
    const double frac = (target - table[i]) / (table[i + 1] - table[i]);
    return 2.0 * pi * (static_cast<double>(i) + frac) / static_cast<double>(n);
}

}  // namespace detail

/// M points i.i.d. uniform in Omega.
inline PointSet sample_domain(const DomainSpec& spec, std::size_t count, Rng& rng) {
    detail::require_count(count, "sample_domain");
    PointSet pts(spec.dim);
    pts.reserve(count);
    std::vector<double> x(spec.dim);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t n = 0; n < count; ++n) {
                    for (int i = 0; i < spec.dim; ++i) x[i] = rng.uniform(s.lo[i], s.hi[i]);
                    pts.push_back(x);
                }
            } else if constexpr (std::is_same_v<T, Ball>) {
                for (std::size_t n = 0; n < count; ++n) {
                    detail::gaussian_direction(rng, x);
                    const double r = s.radius * std::pow(rng.uniform(), 1.0 / spec.dim);
                    for (auto& v : x) v *= r;
                    pts.push_back(x);
                }
            } else {
                // rejection from the bounding disk
                const double rmax = s.max_radius();
                detail::RejectionGuard guard;
                while (pts.size() < count) {
                    const double rho = rmax * std::sqrt(rng.uniform());
                    const double theta = 2.0 * pi * rng.uniform();
                    const bool ok = rho < s.r(theta);
                    guard.step(ok);
                    if (!ok) continue;
                    x[0] = rho * std::cos(theta);
                    x[1] = rho * std::sin(theta);
                    pts.push_back(x);
                }
            }
        },
        spec.shape);
    return pts;
}

/// M_b points i.i.d. uniform in surface measure on dOmega.
inline PointSet sample_boundary(const DomainSpec& spec, std::size_t count, Rng& rng) {
    detail::require_count(count, "sample_boundary");
    PointSet pts(spec.dim);
    pts.reserve(count);
    std::vector<double> x(spec.dim);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                // faces 2f (x_f = lo_f) and 2f+1 (x_f = hi_f), chosen by area
                std::vector<double> cumulative;
                double total = 0.0;
                for (int f = 0; f < spec.dim; ++f) {
                    const double area = spec.volume / (s.hi[f] - s.lo[f]);
                    for (int side = 0; side < 2; ++side) cumulative.push_back(total += area);
                }
                for (std::size_t n = 0; n < count; ++n) {
                    const double pick = rng.uniform() * total;
                    const auto face = static_cast<int>(
                        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                                 2 * spec.dim - 1));
                    const int axis = face / 2;
                    for (int i = 0; i < spec.dim; ++i) x[i] = rng.uniform(s.lo[i], s.hi[i]);
                    x[axis] = (face % 2 == 0) ? s.lo[axis] : s.hi[axis];
                    pts.push_back(x);
                }
            } else if constexpr (std::is_same_v<T, Ball>) {
                for (std::size_t n = 0; n < count; ++n) {
                    detail::gaussian_direction(rng, x);
                    for (auto& v : x) v *= s.radius;
                    pts.push_back(x);
                }
            } else {
                // theta with density proportional to the arclength element
                const double bound = s.speed_bound();
                detail::RejectionGuard guard;
                while (pts.size() < count) {
                    const double theta = 2.0 * pi * rng.uniform();
                    const bool ok = rng.uniform() * bound < s.speed(theta);
                    guard.step(ok);
                    if (!ok) continue;
                    const double r = s.r(theta);
                    x[0] = r * std::cos(theta);
                    x[1] = r * std::sin(theta);
                    pts.push_back(x);
                }
            }
        },
        spec.shape);
    return pts;
}

/// M_Gamma points i.i.d. uniform in surface measure on Gamma.
inline PointSet sample_interface(const InterfaceSpec& spec, std::size_t count, Rng& rng) {
    detail::require_count(count, "sample_interface");
    const int dim = spec.phi.dim;
    PointSet pts(dim);
    pts.reserve(count);
    std::vector<double> x(dim);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, EllipseCurve>) {
                const double bound = std::max(s.a, s.b);
                detail::RejectionGuard guard;
                while (pts.size() < count) {
                    const double theta = 2.0 * pi * rng.uniform();
                    if (s.a != s.b) {
                        const bool ok = rng.uniform() * bound < s.speed(theta);
                        guard.step(ok);
                        if (!ok) continue;
                    }
                    x[0] = s.a * std::cos(theta);
                    x[1] = s.b * std::sin(theta);
                    pts.push_back(x);
                }
            } else {
                for (std::size_t n = 0; n < count; ++n) {
                    detail::gaussian_direction(rng, x);
                    for (auto& v : x) v *= s.radius;
                    pts.push_back(x);
                }
            }
        },
        spec.shape);
    return pts;
}

/// Tensor-product midpoint nodes of a box, per_axis nodes along every axis.
/// The last axis varies fastest.
inline PointSet midpoint_grid(const DomainSpec& spec, int per_axis) {
    const auto* box = std::get_if<Box>(&spec.shape);
    if (box == nullptr) throw UnsupportedError("midpoint_grid: rectangle domains only");
    if (per_axis < 1) throw ConfigError("midpoint_grid: per_axis must be >= 1");
    std::size_t total = 1;
    for (int i = 0; i < spec.dim; ++i) total *= static_cast<std::size_t>(per_axis);
    PointSet pts(spec.dim);
    pts.reserve(total);
    std::vector<int> idx(spec.dim, 0);
    std::vector<double> x(spec.dim);
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t rem = n;
        for (int i = spec.dim - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % static_cast<std::size_t>(per_axis));
            rem /= static_cast<std::size_t>(per_axis);
        }
        for (int i = 0; i < spec.dim; ++i) {
            const double h = (box->hi[i] - box->lo[i]) / per_axis;
            x[i] = box->lo[i] + (idx[i] + 0.5) * h;
        }
        pts.push_back(x);
    }
    return pts;
}

/// count nodes equally spaced in arclength on a planar interface, half-offset.
inline PointSet uniform_interface_nodes(const InterfaceSpec& spec, std::size_t count) {
    detail::require_count(count, "uniform_interface_nodes");
    const auto* e = std::get_if<EllipseCurve>(&spec.shape);
    if (e == nullptr) throw UnsupportedError("uniform_interface_nodes: planar curves only");
    PointSet pts(2);
    std::vector<double> table;
    if (e->a != e->b) table = detail::arclength_table([&](double t) { return e->speed(t); }, 1 << 16);
    for (std::size_t k = 0; k < count; ++k) {
        const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
        const double theta = table.empty() ? 2.0 * pi * frac : detail::invert_arclength(table, frac * table.back());
        const double x[2] = {e->a * std::cos(theta), e->b * std::sin(theta)};
        pts.push_back(x);
    }
    return pts;
}

/// count nodes equally spaced in arclength on a planar domain boundary, half-offset.
/// Rectangles are walked counter-clockwise from the corner (lo_x, lo_y).
inline PointSet uniform_boundary_nodes(const DomainSpec& spec, std::size_t count) {
    detail::require_count(count, "uniform_boundary_nodes");
    if (spec.dim != 2) throw UnsupportedError("uniform_boundary_nodes: planar domains only");
    PointSet pts(2);
    if (const auto* box = std::get_if<Box>(&spec.shape)) {
        const double w = box->hi[0] - box->lo[0], h = box->hi[1] - box->lo[1];
        const double perimeter = 2.0 * (w + h);
        for (std::size_t k = 0; k < count; ++k) {
            double s = perimeter * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
            double x[2];
            if (s < w) {
                x[0] = box->lo[0] + s, x[1] = box->lo[1];
            } else if ((s -= w) < h) {
                x[0] = box->hi[0], x[1] = box->lo[1] + s;
            } else if ((s -= h) < w) {
                x[0] = box->hi[0] - s, x[1] = box->hi[1];
            } else {
                s -= w;
                x[0] = box->lo[0], x[1] = box->hi[1] - s;
            }
            pts.push_back(x);
        }
    } else if (const auto* curve = std::get_if<PolarCurve>(&spec.shape)) {
        const auto table = detail::arclength_table([&](double t) { return curve->speed(t); }, 1 << 16);
        for (std::size_t k = 0; k < count; ++k) {
            const double theta =
                detail::invert_arclength(table, table.back() * (static_cast<double>(k) + 0.5) / static_cast<double>(count));
            const double r = curve->r(theta);
            const double x[2] = {r * std::cos(theta), r * std::sin(theta)};
            pts.push_back(x);
        }
    } else {
        throw UnsupportedError("uniform_boundary_nodes: unsupported boundary");
    }
    return pts;
}

/// Fresh Monte-Carlo batch; domain, interface and boundary are drawn in that order.
inline SampleBatch sample_batch(const ProblemSpec& problem, const BatchSizes& sizes, Rng& rng) {
    SampleBatch b;
    b.domain = sample_domain(problem.domain, sizes.domain, rng);
    b.interface = sample_interface(problem.interface, sizes.interface, rng);
    b.boundary = sample_boundary(problem.domain, sizes.boundary, rng);
    b.vol_domain = problem.domain.volume;
    b.vol_interface = problem.interface.area;
    b.vol_boundary = problem.domain.boundary_volume;
    return b;
}

/// Deterministic midpoint-rule batch; sizes.domain must be a perfect d-th power.
inline SampleBatch midpoint_batch(const ProblemSpec& problem, const BatchSizes& sizes) {
    const int per_axis = static_cast<int>(std::llround(std::pow(static_cast<double>(sizes.domain), 1.0 / problem.dim)));
    std::size_t total = 1;
    for (int i = 0; i < problem.dim; ++i) total *= static_cast<std::size_t>(per_axis);
    if (total != sizes.domain)
        throw ConfigError("fixed-midpoint sampling needs M to be a perfect power of the dimension, got " +
                          std::to_string(sizes.domain));
    SampleBatch b;
    b.domain = midpoint_grid(problem.domain, per_axis);
    b.interface = uniform_interface_nodes(problem.interface, sizes.interface);
    b.boundary = uniform_boundary_nodes(problem.domain, sizes.boundary);
    b.vol_domain = problem.domain.volume;
    b.vol_interface = problem.interface.area;
    b.vol_boundary = problem.domain.boundary_volume;
    return b;
}

}  // namespace sritz
