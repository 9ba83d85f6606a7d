#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/quadrature.hpp"

namespace sritz {

using ScalarField = std::function<double(std::span<const double>)>;
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

/// Level set whose zero set is the interface: negative inside, positive outside.
struct LevelSetFn {
    int dim = 0;
    ScalarField value;
    VectorField gradient;

    double operator()(std::span<const double> x) const { return value(x); }
    void grad(std::span<const double> x, std::span<double> out) const { gradient(x, out); }
};

/// phi(x) = sum_i w_i x_i^2 - offset. Every benchmark interface is of this form.
inline LevelSetFn quadric_level_set(std::vector<double> weights, double offset) {
    LevelSetFn ls;
    ls.dim = static_cast<int>(weights.size());
    ls.value = [weights, offset](std::span<const double> x) {
        double s = -offset;
        for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i] * x[i];
        return s;
    };
    ls.gradient = [weights](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < weights.size(); ++i) g[i] = 2.0 * weights[i] * x[i];
    };
    return ls;
}

// ---------------------------------------------------------------------------
// Domains

/// Axis-aligned box [lo, hi].
struct Box {
    std::vector<double> lo, hi;
};

/// Ball of the given radius centered at the origin.
struct Ball {
    double radius = 1.0;
};

/// Planar region bounded by the polar curve r(theta) = a - b cos(k theta), a > |b|.
struct PolarCurve {
    double a = 1.0;
    double b = 0.0;
    int k = 1;

    double r(double theta) const { return a - b * std::cos(k * theta); }
    double dr(double theta) const { return b * k * std::sin(k * theta); }
    double speed(double theta) const { return std::hypot(r(theta), dr(theta)); }
    double max_radius() const { return a + std::abs(b); }
    /// Upper bound of speed() used as the rejection envelope.
    double speed_bound() const { return std::hypot(a + std::abs(b), std::abs(b) * k); }
};

using DomainShape = std::variant<Box, Ball, PolarCurve>;

struct DomainSpec {
    int dim = 0;
    DomainShape shape;
    std::vector<double> bbox_lo, bbox_hi;
    double volume = 0.0;           // Vol(Omega)
    double boundary_volume = 0.0;  // Vol(dOmega)

    bool contains(std::span<const double> x) const {
        return std::visit(
            [&](const auto& s) -> bool {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    for (int i = 0; i < dim; ++i)
                        if (x[i] < s.lo[i] || x[i] > s.hi[i]) return false;
                    return true;
                } else if constexpr (std::is_same_v<T, Ball>) {
                    return norm2(x) <= s.radius * s.radius;
                } else {
                    return std::hypot(x[0], x[1]) < s.r(std::atan2(x[1], x[0]));
                }
            },
            shape);
    }

    /// Distance-like defect of x from dOmega (zero exactly on the boundary).
    double boundary_defect(std::span<const double> x) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    double best = INFINITY;
                    double outside = 0.0;
                    for (int i = 0; i < dim; ++i) {
                        best = std::min({best, std::abs(x[i] - s.lo[i]), std::abs(x[i] - s.hi[i])});
                        outside = std::max({outside, s.lo[i] - x[i], x[i] - s.hi[i]});
                    }
                    return std::max(best, outside);
                } else if constexpr (std::is_same_v<T, Ball>) {
                    return std::abs(norm(x) - s.radius);
                } else {
                    return std::abs(std::hypot(x[0], x[1]) - s.r(std::atan2(x[1], x[0])));
                }
            },
            shape);
    }

    /// Distance from the origin to dOmega along a unit direction. All supported
    /// domains are star-shaped with respect to the origin.
    double ray_exit(std::span<const double> dir) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    double t = INFINITY;
                    for (int i = 0; i < dim; ++i) {
                        if (dir[i] > 0) t = std::min(t, s.hi[i] / dir[i]);
                        if (dir[i] < 0) t = std::min(t, s.lo[i] / dir[i]);
                    }
                    return t;
                } else if constexpr (std::is_same_v<T, Ball>) {
                    return s.radius / norm(dir);
                } else {
                    return s.r(std::atan2(dir[1], dir[0])) / std::hypot(dir[0], dir[1]);
                }
            },
            shape);
    }
};

// ---------------------------------------------------------------------------
// Interfaces

/// Axis-aligned ellipse (circle when a == b) centered at the origin, parametrized
/// by X(theta) = (a cos theta, b sin theta).
struct EllipseCurve {
    double a = 1.0;
    double b = 1.0;
    double speed(double theta) const { return std::hypot(a * std::sin(theta), b * std::cos(theta)); }
};

/// Sphere of the given radius centered at the origin, any dimension.
struct SphereSurface {
    double radius = 1.0;
};

using InterfaceShape = std::variant<EllipseCurve, SphereSurface>;

struct InterfaceSpec {
    LevelSetFn phi;
    InterfaceShape shape;
    double area = 0.0;  // Vol(Gamma)

    /// n = grad(phi)/|grad(phi)|, pointing from Omega^- into Omega^+.
    void normal(std::span<const double> x, std::span<double> n) const {
        phi.grad(x, n);
        const double len = norm(n);
        for (auto& v : n) v /= len;
    }
};

// ---------------------------------------------------------------------------
// Measures

/// Volume and surface area of the ball of radius R in R^6.
inline std::pair<double, double> sixsphere_measures(double R) {
    if (!(R > 0)) throw DomainError("sixsphere_measures: radius must be positive");
    const double p3 = pi * pi * pi;
    return {p3 * std::pow(R, 6) / 6.0, p3 * std::pow(R, 5)};
}

namespace detail {

// Volume of the unit d-ball as prod_k int_{-pi/2}^{pi/2} cos^k, each factor by Gauss-Legendre.
inline double unit_ball_volume_quadrature(int d, int resolution) {
    const auto rule = gauss_legendre(resolution, -pi / 2, pi / 2);
    double v = 1.0;
    for (int k = 1; k <= d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(std::cos(rule.nodes[i]), k);
        v *= s;
    }
    return v;
}

inline double periodic_integral(const std::function<double(double)>& f, int n) {
    const auto rule = periodic_trapezoid(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rule.weights[i] * f(rule.nodes[i]);
    return s;
}

}  // namespace detail

/// Dense deterministic estimate of Vol(Omega) (boundary == false) or Vol(dOmega).
inline double volume_oracle(const DomainSpec& spec, int resolution, bool boundary = false) {
    if (resolution < 64) throw ConfigError("volume_oracle: resolution must be >= 64");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                auto side = [&](int i) {
                    const auto rule = gauss_legendre(resolution, s.lo[i], s.hi[i]);
                    double len = 0.0;
                    for (double w : rule.weights) len += w;
                    return len;
                };
                if (!boundary) {
                    double v = 1.0;
                    for (int i = 0; i < spec.dim; ++i) v *= side(i);
                    return v;
                }
                double area = 0.0;
                for (int f = 0; f < spec.dim; ++f) {
                    double a = 1.0;
                    for (int i = 0; i < spec.dim; ++i)
                        if (i != f) a *= side(i);
                    area += 2.0 * a;
                }
                return area;
            } else if constexpr (std::is_same_v<T, Ball>) {
                const double v = detail::unit_ball_volume_quadrature(spec.dim, resolution);
                return boundary ? spec.dim * v * std::pow(s.radius, spec.dim - 1) : v * std::pow(s.radius, spec.dim);
            } else {
                if (boundary) return detail::periodic_integral([&](double t) { return s.speed(t); }, resolution);
                return detail::periodic_integral([&](double t) { return 0.5 * s.r(t) * s.r(t); }, resolution);
            }
        },
        spec.shape);
}

/// Dense deterministic estimate of Vol(Gamma).
inline double volume_oracle(const InterfaceSpec& spec, int resolution) {
    if (resolution < 64) throw ConfigError("volume_oracle: resolution must be >= 64");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, EllipseCurve>) {
                return detail::periodic_integral([&](double t) { return s.speed(t); }, resolution);
            } else {
                const int d = spec.phi.dim;
                return d * detail::unit_ball_volume_quadrature(d, resolution) * std::pow(s.radius, d - 1);
            }
        },
        spec.shape);
}

inline DomainSpec make_box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty()) throw ConfigError("make_box: inconsistent bounds");
    DomainSpec d;
    d.dim = static_cast<int>(lo.size());
    d.bbox_lo = lo;
    d.bbox_hi = hi;
    d.volume = 1.0;
    for (int i = 0; i < d.dim; ++i) {
        if (!(hi[i] > lo[i])) throw ConfigError("make_box: empty box");
        d.volume *= hi[i] - lo[i];
    }
    d.boundary_volume = 0.0;
    for (int f = 0; f < d.dim; ++f) d.boundary_volume += 2.0 * d.volume / (hi[f] - lo[f]);
    d.shape = Box{std::move(lo), std::move(hi)};
    return d;
}

inline DomainSpec make_ball(int dim, double radius) {
    if (!(radius > 0)) throw DomainError("make_ball: radius must be positive");
    DomainSpec d;
    d.dim = dim;
    d.shape = Ball{radius};
    d.bbox_lo.assign(dim, -radius);
    d.bbox_hi.assign(dim, radius);
    if (dim == 6) {
        std::tie(d.volume, d.boundary_volume) = sixsphere_measures(radius);
    } else {
        // V_d = pi^{d/2} / Gamma(d/2 + 1)
        const double unit = std::pow(pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
        d.volume = unit * std::pow(radius, dim);
        d.boundary_volume = dim * unit * std::pow(radius, dim - 1);
    }
    return d;
}

inline DomainSpec make_polar(double a, double b, int k) {
    if (!(a > std::abs(b))) throw ConfigError("make_polar: curve must stay at positive radius");
    DomainSpec d;
    d.dim = 2;
    PolarCurve c{a, b, k};
    d.shape = c;
    const double rmax = c.max_radius();
    d.bbox_lo = {-rmax, -rmax};
    d.bbox_hi = {rmax, rmax};
    d.volume = pi * (a * a + 0.5 * b * b);
    // no closed form for the arclength
    d.boundary_volume = detail::periodic_integral([&](double t) { return c.speed(t); }, 4096);
    return d;
}

inline InterfaceSpec make_ellipse_interface(double a, double b, LevelSetFn phi) {
    InterfaceSpec s;
    s.phi = std::move(phi);
    EllipseCurve e{a, b};
    s.shape = e;
    s.area = (a == b) ? 2.0 * pi * a : detail::periodic_integral([&](double t) { return e.speed(t); }, 4096);
    return s;
}

inline InterfaceSpec make_sphere_interface(int dim, double radius, LevelSetFn phi) {
    InterfaceSpec s;
    s.phi = std::move(phi);
    s.shape = SphereSurface{radius};
    s.area = make_ball(dim, radius).boundary_volume;
    return s;
}

// ---------------------------------------------------------------------------
// Problems

/// Exact solution restricted to one side of the interface, with closed-form
/// gradient and Laplacian.
struct ExactBranch {
    ScalarField u;
    VectorField grad;
    ScalarField laplacian;
};

struct ProblemSpec {
    int id = 0;
    std::string name;
    int dim = 0;
    DomainSpec domain;
    InterfaceSpec interface;
    double alpha = 0.0;
    ExactBranch outer;  // Omega^+, phi > 0
    ExactBranch inner;  // Omega^-, phi < 0

    const ExactBranch& branch(std::span<const double> x) const { return interface.phi(x) < 0 ? inner : outer; }

    /// Exact solution u(x).
    double u(std::span<const double> x) const { return branch(x).u(x); }
    void grad_u(std::span<const double> x, std::span<double> out) const { branch(x).grad(x, out); }

    /// Right-hand side f = Laplacian(u) - alpha u, piecewise.
    double f(std::span<const double> x) const {
        const auto& b = branch(x);
        return b.laplacian(x) - alpha * b.u(x);
    }

    /// Source density c = (grad u+ - grad u-) . n on Gamma.
    double c(std::span<const double> x) const {
        double gp[8], gm[8], n[8];
        std::span<double> sp(gp, dim), sm(gm, dim), sn(n, dim);
        outer.grad(x, sp);
        inner.grad(x, sm);
        interface.normal(x, sn);
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += (gp[i] - gm[i]) * n[i];
        return s;
    }

    /// Dirichlet data g = u on dOmega.
    double g(std::span<const double> x) const { return u(x); }
};

/// Builds one of the five benchmark problems.
inline ProblemSpec make_example(int id) {
    ProblemSpec p;
    p.id = id;
    p.name = "example" + std::to_string(id);
    switch (id) {
        case 1:
        case 2: {
            p.dim = 2;
            p.domain = make_box({-1.0, -1.0}, {1.0, 1.0});
            p.interface = make_ellipse_interface(0.5, 0.5, quadric_level_set({1.0, 1.0}, 0.25));
            const double inner_value = -std::log(0.25);
            if (id == 1) {
                p.alpha = 0.0;
                p.outer.u = [](auto x) { return -std::log(x[0] * x[0] + x[1] * x[1]); };
                p.outer.grad = [](auto x, auto g) {
                    const double r2 = x[0] * x[0] + x[1] * x[1];
                    g[0] = -2.0 * x[0] / r2;
                    g[1] = -2.0 * x[1] / r2;
                };
                p.outer.laplacian = [](auto) { return 0.0; };
                p.inner.u = [inner_value](auto) { return inner_value; };
                p.inner.grad = [](auto, auto g) { g[0] = g[1] = 0.0; };
                p.inner.laplacian = [](auto) { return 0.0; };
            } else {
                p.alpha = 1.0;
                p.outer.u = [](auto x) { return -std::log(x[0] * x[0] + x[1] * x[1]) + std::sin(x[0]) + std::sin(x[1]); };
                p.outer.grad = [](auto x, auto g) {
                    const double r2 = x[0] * x[0] + x[1] * x[1];
                    g[0] = -2.0 * x[0] / r2 + std::cos(x[0]);
                    g[1] = -2.0 * x[1] / r2 + std::cos(x[1]);
                };
                p.outer.laplacian = [](auto x) { return -std::sin(x[0]) - std::sin(x[1]); };
                p.inner.u = [inner_value](auto x) { return inner_value + std::sin(x[0]) + std::sin(x[1]); };
                p.inner.grad = [](auto x, auto g) {
                    g[0] = std::cos(x[0]);
                    g[1] = std::cos(x[1]);
                };
                p.inner.laplacian = [](auto x) { return -std::sin(x[0]) - std::sin(x[1]); };
            }
            break;
        }
        case 3: {
            p.dim = 2;
            p.alpha = 0.0;
            p.domain = make_polar(1.0, 0.2, 5);
            constexpr double ax = 1.0 / 0.49, ay = 1.0 / 0.25;
            p.interface = make_ellipse_interface(0.7, 0.5, quadric_level_set({ax, ay}, 1.0));
            // psi = x^2/0.7^2 + y^2/0.5^2
            p.outer.u = [](auto x) { return std::log(ax * x[0] * x[0] + ay * x[1] * x[1]); };
            p.outer.grad = [](auto x, auto g) {
                const double psi = ax * x[0] * x[0] + ay * x[1] * x[1];
                g[0] = 2.0 * ax * x[0] / psi;
                g[1] = 2.0 * ay * x[1] / psi;
            };
            p.outer.laplacian = [](auto x) {
                const double psi = ax * x[0] * x[0] + ay * x[1] * x[1];
                const double gx = 2.0 * ax * x[0], gy = 2.0 * ay * x[1];
                return 2.0 * (ax + ay) / psi - (gx * gx + gy * gy) / (psi * psi);
            };
            p.inner.u = [](auto x) {
                const double psi = ax * x[0] * x[0] + ay * x[1] * x[1];
                return std::sin(x[0]) * std::cos(x[1]) * (psi * psi - 1.0);
            };
            p.inner.grad = [](auto x, auto g) {
                const double psi = ax * x[0] * x[0] + ay * x[1] * x[1];
                const double s = std::sin(x[0]) * std::cos(x[1]);
                const double q = psi * psi - 1.0;
                g[0] = std::cos(x[0]) * std::cos(x[1]) * q + s * 2.0 * psi * 2.0 * ax * x[0];
                g[1] = -std::sin(x[0]) * std::sin(x[1]) * q + s * 2.0 * psi * 2.0 * ay * x[1];
            };
            p.inner.laplacian = [](auto x) {
                const double psi = ax * x[0] * x[0] + ay * x[1] * x[1];
                const double s = std::sin(x[0]) * std::cos(x[1]);
                const double q = psi * psi - 1.0;
                const double sx = std::cos(x[0]) * std::cos(x[1]), sy = -std::sin(x[0]) * std::sin(x[1]);
                const double px = 2.0 * ax * x[0], py = 2.0 * ay * x[1];
                const double qx = 2.0 * psi * px, qy = 2.0 * psi * py;
                const double lap_q = 2.0 * (px * px + py * py) + 2.0 * psi * 2.0 * (ax + ay);
                return -2.0 * s * q + 2.0 * (sx * qx + sy * qy) + s * lap_q;
            };
            break;
        }
        case 4: {
            p.dim = 3;
            p.alpha = 1.0;
            p.domain = make_box({-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0});
            constexpr double w = 1.0 / 0.16;
            p.interface = make_sphere_interface(3, 0.4, quadric_level_set({w, w, w}, 1.0));
            p.outer.u = [](auto x) { return x[0] * (-1.0 + std::exp(0.16 - norm2(x))); };
            p.outer.grad = [](auto x, auto g) {
                const double e = std::exp(0.16 - norm2(x));
                g[0] = -1.0 + e - 2.0 * x[0] * x[0] * e;
                g[1] = -2.0 * x[0] * x[1] * e;
                g[2] = -2.0 * x[0] * x[2] * e;
            };
            p.outer.laplacian = [](auto x) {
                const double r2 = norm2(x);
                return x[0] * std::exp(0.16 - r2) * (4.0 * r2 - 10.0);
            };
            p.inner.u = [](auto x) { return -1.0 + std::cos(0.16 - norm2(x)); };
            p.inner.grad = [](auto x, auto g) {
                const double s = 2.0 * std::sin(0.16 - norm2(x));
                for (int i = 0; i < 3; ++i) g[i] = s * x[i];
            };
            p.inner.laplacian = [](auto x) {
                const double r2 = norm2(x);
                const double k = 0.16 - r2;
                return 6.0 * std::sin(k) - 4.0 * r2 * std::cos(k);
            };
            break;
        }
        case 5: {
            p.dim = 6;
            p.alpha = 0.0;
            p.domain = make_ball(6, 0.6);
            p.interface = make_sphere_interface(6, 0.5, quadric_level_set(std::vector<double>(6, 4.0), 1.0));
            auto sine_sum = [](std::span<const double> x) {
                double s = 0.0;
                for (int i = 0; i < 5; ++i) s += std::sin(x[i]);
                return s;
            };
            p.outer.u = [sine_sum](auto x) { return std::exp(0.25 - norm2(x)) + sine_sum(x); };
            p.outer.grad = [](auto x, auto g) {
                const double e = std::exp(0.25 - norm2(x));
                for (int i = 0; i < 6; ++i) g[i] = -2.0 * x[i] * e + (i < 5 ? std::cos(x[i]) : 0.0);
            };
            p.outer.laplacian = [sine_sum](auto x) {
                const double r2 = norm2(x);
                return std::exp(0.25 - r2) * (4.0 * r2 - 12.0) - sine_sum(x);
            };
            p.inner.u = [sine_sum](auto x) { return 1.0 + 2.0 * std::sin(0.25 - norm2(x)) + sine_sum(x); };
            p.inner.grad = [](auto x, auto g) {
                const double c = std::cos(0.25 - norm2(x));
                for (int i = 0; i < 6; ++i) g[i] = -4.0 * x[i] * c + (i < 5 ? std::cos(x[i]) : 0.0);
            };
            p.inner.laplacian = [sine_sum](auto x) {
                const double r2 = norm2(x);
                const double k = 0.25 - r2;
                return -24.0 * std::cos(k) - 8.0 * r2 * std::sin(k) - sine_sum(x);
            };
            break;
        }
        default:
            throw ConfigError("unknown example id " + std::to_string(id) + " (expected 1..5)");
    }
    return p;
}

/// Accepts "example1".."example5" or a bare integer.
inline ProblemSpec make_example(const std::string& name) {
    std::string digits = name;
    if (digits.rfind("example", 0) == 0) digits = digits.substr(7);
    if (digits.size() != 1 || digits[0] < '1' || digits[0] > '5') throw ConfigError("unknown problem name '" + name + "'");
    return make_example(digits[0] - '0');
}

}  // namespace sritz
