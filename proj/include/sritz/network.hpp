#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"
#include "sritz/rng.hpp"

namespace sritz {

enum class Activation { sigmoid, tanh };

inline std::string to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + s + "'");
}

/// sigma(z) and its first two derivatives in closed form.
template <typename Real>
inline void activate(Activation a, Real z, Real& s, Real& d1, Real& d2) {
    if (a == Activation::sigmoid) {
        if (z >= 0) {
            s = Real(1) / (Real(1) + std::exp(-z));
        } else {
            const Real e = std::exp(z);
            s = e / (Real(1) + e);
        }
        d1 = s * (Real(1) - s);
        d2 = d1 * (Real(1) - Real(2) * s);
    } else {
        s = std::tanh(z);
        d1 = Real(1) - s * s;
        d2 = Real(-2) * s * d1;
    }
}

template <typename Real>
inline Real activate(Activation a, Real z) {
    Real s, d1, d2;
    activate(a, z, s, d1, d2);
    return s;
}

enum class InitScheme { uniform, gaussian };

/// Parameters of the one-hidden-layer network
///   u(x) = W2 sigma(W1 a + b1) + b2,  a = (x, phi(x))  (or a = x without augmentation).
/// Stored as the flat vector p = [W1 (row-major N x in), b1, W2, b2].
template <typename Real = double>
class NetParams {
public:
    NetParams() = default;
    NetParams(int dim, int width, bool augmented = true, Activation activation = Activation::sigmoid)
        : dim_(dim), width_(width), augmented_(augmented), activation_(activation), p_(count(dim, width, augmented), Real(0)) {
        if (dim < 1 || width < 1) throw ConfigError("network needs dim >= 1 and width >= 1");
    }

    /// N_p = (d+3)N + 1 with the level-set input, (d+2)N + 1 without.
    static std::size_t count(int dim, int width, bool augmented) {
        return static_cast<std::size_t>(dim + (augmented ? 3 : 2)) * static_cast<std::size_t>(width) + 1;
    }

    static NetParams unflatten(int dim, int width, bool augmented, Activation activation, std::span<const Real> flat) {
        NetParams p(dim, width, augmented, activation);
        if (flat.size() != p.size()) throw ShapeError("parameter vector has length " + std::to_string(flat.size()) +
                                                      ", expected " + std::to_string(p.size()));
        std::copy(flat.begin(), flat.end(), p.p_.begin());
        return p;
    }

    std::vector<Real> flatten() const { return p_; }

    int dim() const { return dim_; }
    int width() const { return width_; }
    bool augmented() const { return augmented_; }
    Activation activation() const { return activation_; }
    int input_width() const { return dim_ + (augmented_ ? 1 : 0); }
    std::size_t size() const { return p_.size(); }

    std::span<Real> flat() { return p_; }
    std::span<const Real> flat() const { return p_; }

    Real& w1(int j, int m) { return p_[static_cast<std::size_t>(j) * input_width() + m]; }
    Real w1(int j, int m) const { return p_[static_cast<std::size_t>(j) * input_width() + m]; }
    Real& b1(int j) { return p_[b1_offset() + j]; }
    Real b1(int j) const { return p_[b1_offset() + j]; }
    Real& w2(int j) { return p_[w2_offset() + j]; }
    Real w2(int j) const { return p_[w2_offset() + j]; }
    Real& b2() { return p_.back(); }
    Real b2() const { return p_.back(); }

    std::size_t b1_offset() const { return static_cast<std::size_t>(width_) * input_width(); }
    std::size_t w2_offset() const { return b1_offset() + width_; }
    std::size_t b2_offset() const { return w2_offset() + width_; }

    template <typename Other>
    NetParams<Other> cast() const {
        std::vector<Other> flat(p_.begin(), p_.end());
        return NetParams<Other>::unflatten(dim_, width_, augmented_, activation_, flat);
    }

    bool operator==(const NetParams&) const = default;

private:
    int dim_ = 0;
    int width_ = 0;
    bool augmented_ = true;
    Activation activation_ = Activation::sigmoid;
    std::vector<Real> p_;
};

/// Fills every weight and bias: uniform(-1, 1), or Gaussian with std 1/sqrt(input width).
template <typename Real>
void initialize(NetParams<Real>& params, Rng& rng, InitScheme scheme = InitScheme::uniform) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.input_width()));
    for (auto& v : params.flat()) v = static_cast<Real>(scheme == InitScheme::uniform ? rng.uniform(-1.0, 1.0) : scale * rng.normal());
}

/// Intermediate quantities of one network evaluation.
struct EvalRecord {
    std::vector<double> x;
    std::vector<double> a;  // network input
    std::vector<double> z;  // pre-activations W1 a + b1
    std::vector<double> h;  // sigma(z)
    double u = 0.0;
    std::vector<double> grad;  // spatial gradient of u
};

namespace detail {

inline void check_dim(int expected, std::size_t got) {
    if (static_cast<std::size_t>(expected) != got)
        throw ShapeError("point has dimension " + std::to_string(got) + ", network expects " + std::to_string(expected));
}

}  // namespace detail

/// u from stored pre-activations; same summation order as evaluate().
inline double output_from_preactivations(const NetParams<double>& params, std::span<const double> z) {
    double u = params.b2();
    for (int j = 0; j < params.width(); ++j) u += params.w2(j) * activate(params.activation(), z[j]);
    return u;
}

/// Full evaluation: input assembly, pre-activations, hidden values, u and grad_x u.
inline EvalRecord evaluate(const NetParams<double>& params, std::span<const double> x, const LevelSetFn& phi) {
    const int d = params.dim();
    detail::check_dim(d, x.size());
    EvalRecord r;
    r.x.assign(x.begin(), x.end());
    r.a = r.x;
    std::vector<double> gphi(d, 0.0);
    if (params.augmented()) {
        r.a.push_back(phi(x));
        phi.grad(x, gphi);
    }
    const int in = params.input_width();
    r.z.resize(params.width());
    r.h.resize(params.width());
    r.grad.assign(d, 0.0);
    for (int j = 0; j < params.width(); ++j) {
        double z = params.b1(j);
        for (int m = 0; m < in; ++m) z += params.w1(j, m) * r.a[m];
        r.z[j] = z;
    }
    r.u = params.b2();
    for (int j = 0; j < params.width(); ++j) {
        double s, s1, s2;
        activate(params.activation(), r.z[j], s, s1, s2);
        r.h[j] = s;
        r.u += params.w2(j) * s;
        const double c = params.w2(j) * s1;
        for (int k = 0; k < d; ++k) {
            double q = params.w1(j, k);
            if (params.augmented()) q += params.w1(j, d) * gphi[k];
            r.grad[k] += c * q;
        }
    }
    return r;
}

/// u(x) = W2 sigma(W1 (x, phi(x)) + b1) + b2.
inline double forward(const NetParams<double>& params, std::span<const double> x, const LevelSetFn& phi) {
    return evaluate(params, x, phi).u;
}

/// Spatial gradient of u; the augmented column of W1 enters through grad(phi).
inline std::vector<double> grad_x(const NetParams<double>& params, std::span<const double> x, const LevelSetFn& phi) {
    return evaluate(params, x, phi).grad;
}

/// Allocation-free evaluation of u and grad_x u given phi(x) and grad(phi)(x);
/// hot path for losses and error sweeps.
template <typename Real>
Real evaluate_fast(const NetParams<Real>& params, const Real* x, Real phi_value, const Real* phi_grad, Real* grad_out) {
    const int d = params.dim();
    const int in = params.input_width();
    const bool aug = params.augmented();
    const Real* p = params.flat().data();
    const Real* b1 = p + params.b1_offset();
    const Real* w2 = p + params.w2_offset();
    Real u = params.b2();
    if (grad_out != nullptr)
        for (int k = 0; k < d; ++k) grad_out[k] = Real(0);
    for (int j = 0; j < params.width(); ++j) {
        const Real* row = p + static_cast<std::size_t>(j) * in;
        Real z = b1[j];
        for (int m = 0; m < d; ++m) z += row[m] * x[m];
        if (aug) z += row[d] * phi_value;
        Real s, s1, s2;
        activate(params.activation(), z, s, s1, s2);
        u += w2[j] * s;
        if (grad_out != nullptr) {
            const Real c = w2[j] * s1;
            for (int k = 0; k < d; ++k) grad_out[k] += c * (aug ? row[k] + row[d] * phi_grad[k] : row[k]);
        }
    }
    return u;
}

}  // namespace sritz
