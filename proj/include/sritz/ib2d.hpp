#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <span>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"

namespace sritz::ib {

/// Node-centered m x m grid on [lo, hi]^2; boundary nodes lie on the domain boundary.
struct Grid2D {
    int m = 0;
    double lo = -1.0;
    double hi = 1.0;

    double h() const { return (hi - lo) / (m - 1); }
    double coord(int i) const { return i == m - 1 ? hi : lo + i * h(); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * m + i; }  // i along x
    std::size_t nodes() const { return static_cast<std::size_t>(m) * m; }
};

/// Lagrangian markers X_k with arclength weight ds.
struct Markers {
    PointSet points{2};
    double ds = 0.0;
};

/// count markers equally spaced in angle on a circle, X_k at angle 2 pi k / count.
inline Markers circle_markers(double radius, int count) {
    if (count < 1) throw ConfigError("need at least one marker");
    Markers mk;
    for (int k = 0; k < count; ++k) {
        const double t = 2.0 * pi * k / count;
        const double x[2] = {radius * std::cos(t), radius * std::sin(t)};
        mk.points.push_back(x);
    }
    mk.ds = 2.0 * pi * radius / count;
    return mk;
}

/// One-dimensional 4-point cosine kernel (1/(4h))(1 + cos(pi r / (2h))) on |r| <= 2h.
inline double cosine_delta(double r, double h) {
    const double a = std::abs(r);
    if (a > 2.0 * h) return 0.0;
    return (1.0 + std::cos(pi * a / (2.0 * h))) / (4.0 * h);
}

/// F(x_i) = sum_k c(X_k) delta_h(x_i - X_k) ds with delta_h(x, y) = d_h(x) d_h(y).
inline std::vector<double> spread_force(const Grid2D& grid, const Markers& markers,
                                        const std::function<double(std::span<const double>)>& c) {
    std::vector<double> F(grid.nodes(), 0.0);
    const double h = grid.h();
    for (std::size_t k = 0; k < markers.points.size(); ++k) {
        const auto X = markers.points[k];
        const double strength = c(X) * markers.ds;
        if (strength == 0.0) continue;
        const int i0 = std::max(0, static_cast<int>(std::floor((X[0] - 2.0 * h - grid.lo) / h)));
        const int j0 = std::max(0, static_cast<int>(std::floor((X[1] - 2.0 * h - grid.lo) / h)));
        const int i1 = std::min(grid.m - 1, static_cast<int>(std::ceil((X[0] + 2.0 * h - grid.lo) / h)));
        const int j1 = std::min(grid.m - 1, static_cast<int>(std::ceil((X[1] + 2.0 * h - grid.lo) / h)));
        for (int j = j0; j <= j1; ++j) {
            const double dy = cosine_delta(grid.coord(j) - X[1], h);
            if (dy == 0.0) continue;
            for (int i = i0; i <= i1; ++i) F[grid.index(i, j)] += strength * cosine_delta(grid.coord(i) - X[0], h) * dy;
        }
    }
    return F;
}

struct Solution {
    Grid2D grid;
    std::vector<double> u;  // all m^2 nodes, boundary included
    int iterations = 0;
    double residual = 0.0;  // final relative residual of the CG solve
};

/// Solves (Delta_h - alpha) u = f + F on interior nodes with u = g on boundary
/// nodes, by conjugate gradient on the SPD operator -(Delta_h - alpha).
inline Solution solve(const ProblemSpec& problem, int m, int m_gamma, double tolerance = 1e-10) {
    const auto* box = std::get_if<Box>(&problem.domain.shape);
    const auto* circle = std::get_if<EllipseCurve>(&problem.interface.shape);
    if (problem.dim != 2 || box == nullptr || circle == nullptr || circle->a != circle->b)
        throw UnsupportedError("IB solver handles a square domain with a circular interface");
    if (box->lo[0] != box->lo[1] || box->hi[0] != box->hi[1]) throw UnsupportedError("IB solver needs a square domain");
    if (m < 3) throw ConfigError("IB grid needs m >= 3");

    Solution sol;
    sol.grid = Grid2D{m, box->lo[0], box->hi[0]};
    const auto& grid = sol.grid;
    const double h = grid.h();
    const double inv_h2 = 1.0 / (h * h);
    const double alpha = problem.alpha;

    const Markers markers = circle_markers(circle->a, m_gamma);
    const auto F = spread_force(grid, markers, [&](auto x) { return problem.c(x); });

    sol.u.assign(grid.nodes(), 0.0);
    double x[2];
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            if (i == 0 || j == 0 || i == m - 1 || j == m - 1) {
                x[0] = grid.coord(i), x[1] = grid.coord(j);
                sol.u[grid.index(i, j)] = problem.g(x);
            }

    // interior unknowns, numbered (i-1) + (j-1)(m-2)
    const int n = m - 2;
    auto id = [n](int i, int j) { return static_cast<std::size_t>(j - 1) * n + (i - 1); };
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    for (int j = 1; j < m - 1; ++j)
        for (int i = 1; i < m - 1; ++i) {
            x[0] = grid.coord(i), x[1] = grid.coord(j);
            double rhs = -(problem.f(x) + F[grid.index(i, j)]);
            if (i == 1) rhs += sol.u[grid.index(0, j)] * inv_h2;
            if (i == m - 2) rhs += sol.u[grid.index(m - 1, j)] * inv_h2;
            if (j == 1) rhs += sol.u[grid.index(i, 0)] * inv_h2;
            if (j == m - 2) rhs += sol.u[grid.index(i, m - 1)] * inv_h2;
            b[id(i, j)] = rhs;
        }

    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int j = 1; j < m - 1; ++j)
            for (int i = 1; i < m - 1; ++i) {
                const double c = v[id(i, j)];
                double s = (4.0 * inv_h2 + alpha) * c;
                if (i > 1) s -= inv_h2 * v[id(i - 1, j)];
                if (i < m - 2) s -= inv_h2 * v[id(i + 1, j)];
                if (j > 1) s -= inv_h2 * v[id(i, j - 1)];
                if (j < m - 2) s -= inv_h2 * v[id(i, j + 1)];
                out[id(i, j)] = s;
            }
    };

    std::vector<double> v(b.size(), 0.0), r = b, p = b, Ap(b.size());
    const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    double rr = bnorm * bnorm;
    const int max_iter = 10 * m;
    int it = 0;
    while (std::sqrt(rr) > tolerance * bnorm) {
        if (it >= max_iter)
            throw SolverError("IB conjugate gradient did not converge in " + std::to_string(max_iter) + " iterations");
        apply(p, Ap);
        const double a = rr / std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] += a * p[k];
            r[k] -= a * Ap[k];
        }
        const double rr_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
        ++it;
    }
    sol.iterations = it;
    sol.residual = bnorm > 0 ? std::sqrt(rr) / bnorm : 0.0;
    for (int j = 1; j < m - 1; ++j)
        for (int i = 1; i < m - 1; ++i) sol.u[grid.index(i, j)] = v[id(i, j)];
    return sol;
}

/// Exact solution sampled at every grid node.
inline std::vector<double> exact_on_grid(const ProblemSpec& problem, const Grid2D& grid) {
    std::vector<double> u(grid.nodes());
    double x[2];
    for (int j = 0; j < grid.m; ++j)
        for (int i = 0; i < grid.m; ++i) {
            x[0] = grid.coord(i), x[1] = grid.coord(j);
            u[grid.index(i, j)] = problem.u(x);
        }
    return u;
}

/// max |u_ib - u| / max |u| over grid nodes.
inline double grid_errors(std::span<const double> u_ib, std::span<const double> exact) {
    if (u_ib.size() != exact.size()) throw ShapeError("grid_errors: size mismatch");
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k) {
        err = std::max(err, std::abs(u_ib[k] - exact[k]));
        ref = std::max(ref, std::abs(exact[k]));
    }
    return err / ref;
}

inline double grid_errors(const Solution& sol, const ProblemSpec& problem) {
    return grid_errors(sol.u, exact_on_grid(problem, sol.grid));
}

}  // namespace sritz::ib
