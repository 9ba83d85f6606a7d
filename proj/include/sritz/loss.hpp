#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"
#include "sritz/network.hpp"
#include "sritz/sampler.hpp"

namespace sritz {

/// Per-term breakdown of the discrete energy.
struct LossTerms {
    double domain = 0.0;     // Vol(Omega)/M   sum (|grad u|^2/2 + alpha u^2/2 + u f)
    double interface = 0.0;  // Vol(Gamma)/M_G sum c u
    double boundary = 0.0;   // beta Vol(dOmega)/M_b sum (u - g)^2
    double total() const { return domain + interface + boundary; }
};

/// A sample batch with every problem-dependent quantity evaluated once, in the
/// working precision of the kernel.
template <typename Real>
struct PreparedBatch {
    struct Part {
        std::size_t count = 0;
        Real weight = 0;          // Vol / count
        std::vector<Real> x;      // count x d
        std::vector<Real> phi;    // level set values
        std::vector<Real> gphi;   // count x d, domain part only
        std::vector<Real> data;   // f, c or g
    };
    int dim = 0;
    Real alpha = 0;
    Real beta = 0;
    Part domain, interface, boundary;
};

namespace detail {

template <typename Real>
void prepare_part(typename PreparedBatch<Real>::Part& part, const PointSet& pts, double volume, const LevelSetFn& phi,
                  bool with_grad, auto&& data_fn) {
    const int d = pts.dim();
    part.count = pts.size();
    part.weight = static_cast<Real>(volume / static_cast<double>(pts.size()));
    part.x.resize(part.count * d);
    part.phi.resize(part.count);
    part.data.resize(part.count);
    if (with_grad) part.gphi.resize(part.count * d);
    std::vector<double> g(d);
    for (std::size_t i = 0; i < part.count; ++i) {
        const auto x = pts[i];
        for (int k = 0; k < d; ++k) part.x[i * d + k] = static_cast<Real>(x[k]);
        part.phi[i] = static_cast<Real>(phi(x));
        if (with_grad) {
            phi.grad(x, g);
            for (int k = 0; k < d; ++k) part.gphi[i * d + k] = static_cast<Real>(g[k]);
        }
        part.data[i] = static_cast<Real>(data_fn(x));
    }
}

}  // namespace detail

template <typename Real = double>
PreparedBatch<Real> prepare_batch(const ProblemSpec& problem, const SampleBatch& batch, double beta) {
    if (batch.domain.empty() || batch.interface.empty() || batch.boundary.empty())
        throw ConfigError("loss needs non-empty domain, interface and boundary point sets");
    if (!(beta > 0)) throw DomainError("penalty beta must be positive");
    if (batch.domain.dim() != problem.dim) throw ShapeError("batch dimension does not match the problem");
    PreparedBatch<Real> pb;
    pb.dim = problem.dim;
    pb.alpha = static_cast<Real>(problem.alpha);
    pb.beta = static_cast<Real>(beta);
    const auto& phi = problem.interface.phi;
    detail::prepare_part<Real>(pb.domain, batch.domain, batch.vol_domain, phi, true, [&](auto x) { return problem.f(x); });
    detail::prepare_part<Real>(pb.interface, batch.interface, batch.vol_interface, phi, false,
                               [&](auto x) { return problem.c(x); });
    detail::prepare_part<Real>(pb.boundary, batch.boundary, batch.vol_boundary, phi, false,
                               [&](auto x) { return problem.g(x); });
    return pb;
}

/// Discrete energy and its exact gradient with respect to the flat parameter
/// vector. Points are visited sequentially by index within each part, parts in
/// the order domain, interface, boundary.
///
/// With s = sigma(z), q_j = dz_j/dx = W1_j[0:d] + W1_j[d] grad(phi) and
/// G = grad_x u, a domain point with weight w contributes
///   dL/du = w (alpha u + f),   dL/dG = w G,
/// and dG/dp involves sigma'' through d(s'_j)/dp.
template <typename Real>
LossTerms loss_and_grad(const NetParams<Real>& params, const PreparedBatch<Real>& batch, std::span<Real> grad) {
    const int d = params.dim();
    const int in = params.input_width();
    const int n = params.width();
    const bool aug = params.augmented();
    if (batch.dim != d) throw ShapeError("batch dimension does not match the network");
    if (grad.size() != params.size()) throw ShapeError("gradient buffer has the wrong length");
    std::fill(grad.begin(), grad.end(), Real(0));

    const Real* p = params.flat().data();
    const Real* b1 = p + params.b1_offset();
    const Real* w2 = p + params.w2_offset();
    Real* g_w1 = grad.data();
    Real* g_b1 = grad.data() + params.b1_offset();
    Real* g_w2 = grad.data() + params.w2_offset();
    Real& g_b2 = grad[params.b2_offset()];

    std::vector<Real> s(n), s1(n), s2(n), q(static_cast<std::size_t>(n) * d), G(d);

    auto hidden = [&](const Real* x, Real phi_value) {
        Real u = params.b2();
        for (int j = 0; j < n; ++j) {
            const Real* row = p + static_cast<std::size_t>(j) * in;
            Real z = b1[j];
            for (int m = 0; m < d; ++m) z += row[m] * x[m];
            if (aug) z += row[d] * phi_value;
            activate(params.activation(), z, s[j], s1[j], s2[j]);
            u += w2[j] * s[j];
        }
        return u;
    };

    // dL/du = r for a point whose loss depends on u only
    auto accumulate_value_grad = [&](const Real* x, Real phi_value, Real r) {
        g_b2 += r;
        for (int j = 0; j < n; ++j) {
            g_w2[j] += r * s[j];
            const Real cb = r * w2[j] * s1[j];
            g_b1[j] += cb;
            Real* grow = g_w1 + static_cast<std::size_t>(j) * in;
            for (int m = 0; m < d; ++m) grow[m] += cb * x[m];
            if (aug) grow[d] += cb * phi_value;
        }
    };

    LossTerms terms;
    const Real alpha = batch.alpha;

    {
        const auto& part = batch.domain;
        const Real w = part.weight;
        Real acc = 0;
        for (std::size_t i = 0; i < part.count; ++i) {
            const Real* x = part.x.data() + i * d;
            const Real* gphi = part.gphi.data() + i * d;
            const Real phi_value = part.phi[i];
            const Real f = part.data[i];
            const Real u = hidden(x, phi_value);
            for (int k = 0; k < d; ++k) G[k] = 0;
            for (int j = 0; j < n; ++j) {
                const Real* row = p + static_cast<std::size_t>(j) * in;
                Real* qj = q.data() + static_cast<std::size_t>(j) * d;
                const Real c = w2[j] * s1[j];
                for (int k = 0; k < d; ++k) {
                    qj[k] = aug ? row[k] + row[d] * gphi[k] : row[k];
                    G[k] += c * qj[k];
                }
            }
            Real g2 = 0, g_dot_gphi = 0;
            for (int k = 0; k < d; ++k) {
                g2 += G[k] * G[k];
                g_dot_gphi += G[k] * gphi[k];
            }
            acc += Real(0.5) * g2 + Real(0.5) * alpha * u * u + u * f;

            const Real r = w * (alpha * u + f);
            g_b2 += r;
            for (int j = 0; j < n; ++j) {
                const Real* qj = q.data() + static_cast<std::size_t>(j) * d;
                Real gq = 0;
                for (int k = 0; k < d; ++k) gq += G[k] * qj[k];
                g_w2[j] += r * s[j] + w * s1[j] * gq;
                const Real cb = w2[j] * (r * s1[j] + w * s2[j] * gq);
                const Real ce = w * w2[j] * s1[j];
                g_b1[j] += cb;
                Real* grow = g_w1 + static_cast<std::size_t>(j) * in;
                for (int m = 0; m < d; ++m) grow[m] += cb * x[m] + ce * G[m];
                if (aug) grow[d] += cb * phi_value + ce * g_dot_gphi;
            }
        }
        terms.domain = static_cast<double>(w * acc);
    }
    {
        const auto& part = batch.interface;
        const Real w = part.weight;
        Real acc = 0;
        for (std::size_t i = 0; i < part.count; ++i) {
            const Real* x = part.x.data() + i * d;
            const Real c = part.data[i];
            const Real u = hidden(x, part.phi[i]);
            acc += c * u;
            accumulate_value_grad(x, part.phi[i], w * c);
        }
        terms.interface = static_cast<double>(w * acc);
    }
    {
        const auto& part = batch.boundary;
        const Real w = part.weight * batch.beta;
        Real acc = 0;
        for (std::size_t i = 0; i < part.count; ++i) {
            const Real* x = part.x.data() + i * d;
            const Real diff = hidden(x, part.phi[i]) - part.data[i];
            acc += diff * diff;
            accumulate_value_grad(x, part.phi[i], Real(2) * w * diff);
        }
        terms.boundary = static_cast<double>(w * acc);
    }
    return terms;
}

/// Discrete energy only (no parameter gradient).
template <typename Real>
LossTerms loss_value(const NetParams<Real>& params, const PreparedBatch<Real>& batch) {
    const int d = params.dim();
    if (batch.dim != d) throw ShapeError("batch dimension does not match the network");
    std::vector<Real> G(d);
    LossTerms terms;
    Real acc = 0;
    for (std::size_t i = 0; i < batch.domain.count; ++i) {
        const Real u = evaluate_fast(params, batch.domain.x.data() + i * d, batch.domain.phi[i],
                                     batch.domain.gphi.data() + i * d, G.data());
        Real g2 = 0;
        for (int k = 0; k < d; ++k) g2 += G[k] * G[k];
        acc += Real(0.5) * g2 + Real(0.5) * batch.alpha * u * u + u * batch.domain.data[i];
    }
    terms.domain = static_cast<double>(batch.domain.weight * acc);
    acc = 0;
    for (std::size_t i = 0; i < batch.interface.count; ++i)
        acc += batch.interface.data[i] *
               evaluate_fast<Real>(params, batch.interface.x.data() + i * d, batch.interface.phi[i], nullptr, nullptr);
    terms.interface = static_cast<double>(batch.interface.weight * acc);
    acc = 0;
    for (std::size_t i = 0; i < batch.boundary.count; ++i) {
        const Real diff =
            evaluate_fast<Real>(params, batch.boundary.x.data() + i * d, batch.boundary.phi[i], nullptr, nullptr) -
            batch.boundary.data[i];
        acc += diff * diff;
    }
    terms.boundary = static_cast<double>(batch.beta * batch.boundary.weight * acc);
    return terms;
}

/// Loss of a raw batch and its gradient with respect to p.
inline std::pair<double, std::vector<double>> loss_param_grad(const NetParams<double>& params, const SampleBatch& batch,
                                                              const ProblemSpec& problem, double beta) {
    if (params.dim() != problem.dim) throw ShapeError("network dimension does not match the problem");
    const auto prepared = prepare_batch<double>(problem, batch, beta);
    std::vector<double> grad(params.size());
    const auto terms = loss_and_grad<double>(params, prepared, grad);
    return {terms.total(), std::move(grad)};
}

}  // namespace sritz
