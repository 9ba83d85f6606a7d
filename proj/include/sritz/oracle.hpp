#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"
#include "sritz/loss.hpp"
#include "sritz/network.hpp"
#include "sritz/quadrature.hpp"
#include "sritz/rng.hpp"
#include "sritz/sampler.hpp"

namespace sritz {

/// Candidate function for the energy: returns v(x) and writes grad v(x).
using FieldFn = std::function<double(std::span<const double>, std::span<double>)>;

inline FieldFn exact_field(const ProblemSpec& problem) {
    return [&problem](std::span<const double> x, std::span<double> g) {
        const auto& b = problem.branch(x);
        b.grad(x, g);
        return b.u(x);
    };
}

inline FieldFn network_field(const NetParams<double>& params, const LevelSetFn& phi) {
    return [&params, &phi](std::span<const double> x, std::span<double> g) {
        double gphi[8];
        phi.grad(x, std::span<double>(gphi, x.size()));
        return evaluate_fast<double>(params, x.data(), phi(x), gphi, g.data());
    };
}

struct OracleResult {
    double energy = 0.0;    // estimate at the final resolution
    double previous = 0.0;  // estimate at half that resolution
    int resolution = 0;
    bool converged = false;
    LossTerms terms;  // breakdown of `energy`
};

namespace detail {

inline constexpr std::size_t oracle_mc_base = 1'000'000;
inline constexpr std::uint64_t oracle_seed = 0x5eed;

/// Ray parameter t in (0, t_end) where phi(t p) changes sign, or t_end if the ray
/// stays inside the interface. Assumes phi(0) < 0 and one crossing.
inline double interface_crossing(const LevelSetFn& phi, std::span<const double> p, double t_end) {
    std::vector<double> x(p.size());
    auto at = [&](double t) {
        for (std::size_t i = 0; i < p.size(); ++i) x[i] = t * p[i];
        return phi(x);
    };
    if (at(t_end) <= 0.0) return t_end;
    double lo = 0.0, hi = t_end;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * t_end; ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct DomainIntegrator {
    const ProblemSpec& problem;
    const FieldFn& v;
    QuadratureRule ref;  // Gauss-Legendre on [-1, 1]
    std::vector<double> x, g;

    DomainIntegrator(const ProblemSpec& p, const FieldFn& field, int resolution)
        : problem(p), v(field), ref(gauss_legendre(resolution)), x(p.dim), g(p.dim) {}

    double density(std::span<const double> pt) {
        const double val = v(pt, g);
        return 0.5 * norm2(g) + 0.5 * problem.alpha * val * val + val * problem.f(pt);
    }

    /// int_0^{t_end} density(t p) scale t^{d-1} dt, split at the interface.
    double ray(std::span<const double> p, double t_end, double scale) {
        const int d = problem.dim;
        const double t_mid = interface_crossing(problem.interface.phi, p, t_end);
        double total = 0.0;
        for (auto [a, b] : {std::pair{0.0, t_mid}, std::pair{t_mid, t_end}}) {
            if (b <= a) continue;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
                const double t = mid + half * ref.nodes[i];
                for (int k = 0; k < d; ++k) x[k] = t * p[k];
                total += half * ref.weights[i] * std::pow(t, d - 1) * density(x);
            }
        }
        return scale * total;
    }
};

/// Tensor Gauss-Legendre over a box in `dims` dimensions; calls f(point, weight).
template <typename F>
void tensor_rule(const std::vector<double>& lo, const std::vector<double>& hi, const QuadratureRule& ref, F&& f) {
    const std::size_t dims = lo.size();
    const std::size_t n = ref.nodes.size();
    std::vector<std::size_t> idx(dims, 0);
    std::vector<double> pt(dims);
    std::size_t total = 1;
    for (std::size_t i = 0; i < dims; ++i) total *= n;
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        double w = 1.0;
        for (std::size_t i = 0; i < dims; ++i) {
            idx[i] = rem % n;
            rem /= n;
            const double mid = 0.5 * (hi[i] + lo[i]), half = 0.5 * (hi[i] - lo[i]);
            pt[i] = mid + half * ref.nodes[idx[i]];
            w *= half * ref.weights[idx[i]];
        }
        f(std::span<const double>(pt), w);
    }
}

/// Unit directions on S^1 or S^2 with weights summing to the sphere measure.
template <typename F>
void sphere_rule(int dim, int resolution, F&& f) {
    if (dim == 2) {
        const auto rule = periodic_trapezoid(2 * resolution);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double p[2] = {std::cos(rule.nodes[i]), std::sin(rule.nodes[i])};
            f(std::span<const double>(p, 2), rule.weights[i]);
        }
    } else {
        const auto mu = gauss_legendre(resolution);
        const auto az = periodic_trapezoid(2 * resolution);
        for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
            const double sn = std::sqrt(1.0 - mu.nodes[i] * mu.nodes[i]);
            for (std::size_t j = 0; j < az.nodes.size(); ++j) {
                const double p[3] = {sn * std::cos(az.nodes[j]), sn * std::sin(az.nodes[j]), mu.nodes[i]};
                f(std::span<const double>(p, 3), mu.weights[i] * az.weights[j]);
            }
        }
    }
}

inline double domain_energy(const ProblemSpec& problem, const FieldFn& v, int resolution) {
    const int d = problem.dim;
    const auto& dom = problem.domain;
    if (d > 3) {
        Rng rng(oracle_seed, Stream::oracle, static_cast<std::uint64_t>(resolution));
        const std::size_t n = oracle_mc_base * static_cast<std::size_t>(resolution) / 128;
        const auto pts = sample_domain(dom, n, rng);
        DomainIntegrator in(problem, v, 1);
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) s += in.density(pts[i]);
        return dom.volume * s / static_cast<double>(n);
    }
    DomainIntegrator in(problem, v, resolution);
    double total = 0.0;
    if (const auto* box = std::get_if<Box>(&dom.shape)) {
        // pyramids from the origin to each face: x = t p, p on the face, dx = |c| t^{d-1} dt dS
        for (int axis = 0; axis < d; ++axis) {
            for (double c : {box->lo[axis], box->hi[axis]}) {
                std::vector<double> lo, hi;
                for (int i = 0; i < d; ++i)
                    if (i != axis) lo.push_back(box->lo[i]), hi.push_back(box->hi[i]);
                std::vector<double> p(d);
                tensor_rule(lo, hi, in.ref, [&](std::span<const double> s, double w) {
                    for (int i = 0, j = 0; i < d; ++i) p[i] = (i == axis) ? c : s[j++];
                    total += w * in.ray(p, 1.0, std::abs(c));
                });
            }
        }
    } else if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
        sphere_rule(d, resolution, [&](std::span<const double> p, double w) { total += w * in.ray(p, ball->radius, 1.0); });
    } else {
        const auto& curve = std::get<PolarCurve>(dom.shape);
        const auto rule = periodic_trapezoid(2 * resolution);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double p[2] = {std::cos(rule.nodes[i]), std::sin(rule.nodes[i])};
            total += rule.weights[i] * in.ray(p, curve.r(rule.nodes[i]), 1.0);
        }
    }
    return total;
}

/// Integral of weight(x) over a surface given by the shape; `value` maps a point to the integrand.
template <typename F>
double surface_integral_sphere(int dim, double radius, int resolution, std::size_t mc_points, F&& value) {
    if (dim > 3) {
        Rng rng(oracle_seed, Stream::oracle, 1000 + static_cast<std::uint64_t>(resolution));
        InterfaceSpec s;
        s.phi.dim = dim;
        s.shape = SphereSurface{radius};
        const auto pts = sample_interface(s, mc_points, rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) acc += value(pts[i]);
        return make_ball(dim, radius).boundary_volume * acc / static_cast<double>(mc_points);
    }
    double total = 0.0;
    std::vector<double> x(dim);
    sphere_rule(dim, resolution, [&](std::span<const double> p, double w) {
        for (int k = 0; k < dim; ++k) x[k] = radius * p[k];
        total += w * std::pow(radius, dim - 1) * value(std::span<const double>(x));
    });
    return total;
}

inline double interface_energy(const ProblemSpec& problem, const FieldFn& v, int resolution) {
    std::vector<double> g(problem.dim);
    auto value = [&](std::span<const double> x) { return problem.c(x) * v(x, g); };
    if (const auto* e = std::get_if<EllipseCurve>(&problem.interface.shape)) {
        const auto rule = periodic_trapezoid(4 * resolution);
        double total = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = rule.nodes[i];
            const double x[2] = {e->a * std::cos(t), e->b * std::sin(t)};
            total += rule.weights[i] * e->speed(t) * value(std::span<const double>(x, 2));
        }
        return total;
    }
    const auto& s = std::get<SphereSurface>(problem.interface.shape);
    return surface_integral_sphere(problem.dim, s.radius, resolution, oracle_mc_base * resolution / 128, value);
}

inline double boundary_energy(const ProblemSpec& problem, const FieldFn& v, double beta, int resolution) {
    const int d = problem.dim;
    std::vector<double> g(d);
    auto value = [&](std::span<const double> x) {
        const double diff = v(x, g) - problem.g(x);
        return diff * diff;
    };
    const auto& dom = problem.domain;
    double total = 0.0;
    if (const auto* box = std::get_if<Box>(&dom.shape)) {
        if (d > 3) {
            Rng rng(oracle_seed, Stream::oracle, 2000 + static_cast<std::uint64_t>(resolution));
            const std::size_t n = oracle_mc_base * resolution / 128;
            const auto pts = sample_boundary(dom, n, rng);
            for (std::size_t i = 0; i < pts.size(); ++i) total += value(pts[i]);
            return beta * dom.boundary_volume * total / static_cast<double>(n);
        }
        const auto ref = gauss_legendre(resolution);
        std::vector<double> x(d);
        for (int axis = 0; axis < d; ++axis) {
            for (double c : {box->lo[axis], box->hi[axis]}) {
                std::vector<double> lo, hi;
                for (int i = 0; i < d; ++i)
                    if (i != axis) lo.push_back(box->lo[i]), hi.push_back(box->hi[i]);
                tensor_rule(lo, hi, ref, [&](std::span<const double> s, double w) {
                    for (int i = 0, j = 0; i < d; ++i) x[i] = (i == axis) ? c : s[j++];
                    total += w * value(x);
                });
            }
        }
    } else if (const auto* ball = std::get_if<Ball>(&dom.shape)) {
        total = surface_integral_sphere(d, ball->radius, resolution, oracle_mc_base * resolution / 128, value);
    } else {
        const auto& curve = std::get<PolarCurve>(dom.shape);
        const auto rule = periodic_trapezoid(4 * resolution);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = rule.nodes[i], r = curve.r(t);
            const double x[2] = {r * std::cos(t), r * std::sin(t)};
            total += rule.weights[i] * curve.speed(t) * value(std::span<const double>(x, 2));
        }
    }
    return beta * total;
}

}  // namespace detail

/// Penalized energy of v by deterministic quadrature at one resolution
/// (Monte-Carlo with a fixed seed for d > 3).
inline LossTerms energy_estimate(const ProblemSpec& problem, const FieldFn& v, double beta, int resolution) {
    LossTerms t;
    t.domain = detail::domain_energy(problem, v, resolution);
    t.interface = detail::interface_energy(problem, v, resolution);
    t.boundary = detail::boundary_energy(problem, v, beta, resolution);
    return t;
}

/// Penalized energy of v, doubling the resolution until successive estimates agree
/// to 1e-4 relative. max_resolution = 0 picks a cap by dimension.
inline OracleResult energy_oracle(const ProblemSpec& problem, const FieldFn& v, double beta, int resolution = 128,
                                  int max_resolution = 0) {
    if (resolution < 128) throw ConfigError("energy_oracle: resolution must be >= 128");
    if (!(beta > 0)) throw DomainError("energy_oracle: beta must be positive");
    if (max_resolution == 0) max_resolution = problem.dim == 2 ? 2048 : (problem.dim == 3 ? 256 : 1024);
    OracleResult r;
    LossTerms prev = energy_estimate(problem, v, beta, resolution);
    r.energy = r.previous = prev.total();
    r.terms = prev;
    r.resolution = resolution;
    while (2 * r.resolution <= max_resolution) {
        const LossTerms cur = energy_estimate(problem, v, beta, 2 * r.resolution);
        r.resolution *= 2;
        r.previous = r.energy;
        r.energy = cur.total();
        r.terms = cur;
        if (std::abs(r.energy - r.previous) <= 1e-4 * std::abs(r.energy)) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace sritz
