#pragma once

#include <cmath>
#include <vector>

#include "sritz/core.hpp"

namespace sritz {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [lo, hi] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n, double lo = -1.0, double hi = 1.0) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (x * p0 - p1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

/// Rescales a rule on [-1, 1] to [lo, hi].
inline QuadratureRule rescale(const QuadratureRule& ref, double lo, double hi) {
    QuadratureRule out = ref;
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        out.nodes[i] = mid + half * ref.nodes[i];
        out.weights[i] = half * ref.weights[i];
    }
    return out;
}

/// Periodic trapezoid rule on [0, 2*pi) with n nodes (spectrally accurate for smooth periodic integrands).
inline QuadratureRule periodic_trapezoid(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.assign(n, 2.0 * pi / n);
    for (int i = 0; i < n; ++i) rule.nodes[i] = 2.0 * pi * i / n;
    return rule;
}

}  // namespace sritz
