#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sritz/core.hpp"

namespace sritz {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates of the bias-corrected Adam update.
template <typename Real = double>
struct AdamState {
    explicit AdamState(std::size_t n, AdamHyper hyper = {}) : m(n, Real(0)), v(n, Real(0)), hyper(hyper) {}
    std::vector<Real> m;
    std::vector<Real> v;
    std::size_t t = 0;
    AdamHyper hyper;
};

namespace detail {

template <typename Real>
void check_finite(std::span<const Real> grad, std::size_t iteration) {
    for (Real g : grad)
        if (!std::isfinite(g)) throw TrainingError(iteration, "gradient");
}

}  // namespace detail

/// p <- p - lr * mhat / (sqrt(vhat) + eps).
template <typename Real>
void adam_step(AdamState<Real>& state, std::span<Real> params, std::span<const Real> grad, double lr) {
    if (params.size() != grad.size() || state.m.size() != grad.size()) throw ShapeError("adam_step: length mismatch");
    detail::check_finite(grad, state.t);
    ++state.t;
    const auto& h = state.hyper;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = static_cast<Real>(h.beta1 * state.m[i] + (1.0 - h.beta1) * grad[i]);
        state.v[i] = static_cast<Real>(h.beta2 * state.v[i] + (1.0 - h.beta2) * grad[i] * grad[i]);
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] = static_cast<Real>(params[i] - lr * mhat / (std::sqrt(vhat) + h.epsilon));
    }
}

/// p <- p - lr * grad.
template <typename Real>
void sgd_step(std::span<Real> params, std::span<const Real> grad, double lr) {
    if (params.size() != grad.size()) throw ShapeError("sgd_step: length mismatch");
    detail::check_finite(grad, 0);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = static_cast<Real>(params[i] - lr * grad[i]);
}

}  // namespace sritz
