#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sritz/core.hpp"
#include "sritz/geometry.hpp"
#include "sritz/loss.hpp"
#include "sritz/network.hpp"
#include "sritz/optim.hpp"
#include "sritz/rng.hpp"
#include "sritz/sampler.hpp"

namespace sritz {

enum class Optimizer { adam, sgd };
enum class SamplingMode { resample, fixed_midpoint };
enum class Precision { float64, float32 };

inline std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }
inline std::string to_string(SamplingMode m) { return m == SamplingMode::resample ? "resample" : "fixed-midpoint"; }
inline std::string to_string(Precision p) { return p == Precision::float64 ? "double" : "single"; }

inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "sgd") return Optimizer::sgd;
    throw ConfigError("unknown optimizer '" + s + "'");
}
inline SamplingMode sampling_from_string(const std::string& s) {
    if (s == "resample" || s == "resample-per-iteration") return SamplingMode::resample;
    if (s == "fixed-midpoint") return SamplingMode::fixed_midpoint;
    throw ConfigError("unknown sampling mode '" + s + "'");
}
inline Precision precision_from_string(const std::string& s) {
    if (s == "double") return Precision::float64;
    if (s == "single") return Precision::float32;
    throw ConfigError("unknown precision '" + s + "'");
}

/// Fresh-point count for the testing loss: 1e6 in 2D, 1e5 otherwise.
inline std::size_t default_test_points(int dim) { return dim == 2 ? 1'000'000 : 100'000; }

struct TrainConfig {
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 5e-3;
    std::size_t iterations = 50000;
    double beta = 200.0;
    BatchSizes batch{200, 80, 80};
    SamplingMode sampling = SamplingMode::resample;
    std::uint64_t seed = 1;
    std::size_t trace_stride = 100;
    Precision precision = Precision::float64;
    AdamHyper adam{};
    bool track_test_loss = false;
    std::size_t test_points = 0;  // 0: default_test_points(d); interface/boundary use a tenth
    std::size_t checkpoint_stride = 0;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (!(beta > 0)) throw ConfigError("beta must be positive");
        if (batch.domain < 1 || batch.interface < 1 || batch.boundary < 1) throw ConfigError("batch sizes must be >= 1");
        if (trace_stride < 1) throw ConfigError("trace stride must be >= 1");
    }
};

struct TraceRow {
    std::size_t iteration = 0;
    LossTerms train;
    bool has_test = false;
    LossTerms test;
};

struct LossTrace {
    std::vector<TraceRow> rows;     // every trace_stride iterations and the last one
    std::vector<double> history;    // training loss of every iteration

    /// Mean training loss over the last `window` iterations.
    double trailing_mean(std::size_t window) const {
        if (history.empty()) return std::numeric_limits<double>::quiet_NaN();
        window = std::min(window, history.size());
        return std::accumulate(history.end() - static_cast<std::ptrdiff_t>(window), history.end(), 0.0) /
               static_cast<double>(window);
    }
};

struct TrainResult {
    NetParams<double> params;
    LossTrace trace;
    double seconds = 0.0;
};

using CheckpointFn = std::function<void(std::size_t iteration, const NetParams<double>&)>;

/// Energy of the network on a fresh batch drawn from (seed, test stream, index).
inline LossTerms testing_loss(const ProblemSpec& problem, const NetParams<double>& params, double beta, std::size_t points,
                              std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, Stream::test, index);
    const std::size_t surface = std::max<std::size_t>(1, points / 10);
    const auto batch = sample_batch(problem, {points, surface, surface}, rng);
    return loss_value(params, prepare_batch<double>(problem, batch, beta));
}

namespace detail {

inline void check_terms(const LossTerms& t, std::size_t iteration) {
    if (!std::isfinite(t.domain)) throw TrainingError(iteration, "domain term");
    if (!std::isfinite(t.interface)) throw TrainingError(iteration, "interface term");
    if (!std::isfinite(t.boundary)) throw TrainingError(iteration, "boundary term");
}

template <typename Real>
TrainResult train_impl(const ProblemSpec& problem, const NetParams<double>& initial, const TrainConfig& cfg,
                       const CheckpointFn& checkpoint) {
    const auto start = std::chrono::steady_clock::now();
    NetParams<Real> params = initial.template cast<Real>();
    std::vector<Real> grad(params.size());
    AdamState<Real> adam(params.size(), cfg.adam);
    const std::size_t test_points = cfg.test_points ? cfg.test_points : default_test_points(problem.dim);

    PreparedBatch<Real> fixed;
    if (cfg.sampling == SamplingMode::fixed_midpoint)
        fixed = prepare_batch<Real>(problem, midpoint_batch(problem, cfg.batch), cfg.beta);

    TrainResult result;
    result.trace.history.reserve(cfg.iterations);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        PreparedBatch<Real> fresh;
        if (cfg.sampling == SamplingMode::resample) {
            Rng rng(cfg.seed, Stream::batch, it);
            fresh = prepare_batch<Real>(problem, sample_batch(problem, cfg.batch, rng), cfg.beta);
        }
        const auto& batch = cfg.sampling == SamplingMode::resample ? fresh : fixed;
        const LossTerms terms = loss_and_grad<Real>(params, batch, grad);
        check_terms(terms, it);
        for (Real g : grad)
            if (!std::isfinite(g)) throw TrainingError(it, "gradient");
        result.trace.history.push_back(terms.total());

        if (it % cfg.trace_stride == 0 || it + 1 == cfg.iterations) {
            TraceRow row{it, terms, false, {}};
            if (cfg.track_test_loss) {
                row.test = testing_loss(problem, params.template cast<double>(), cfg.beta, test_points, cfg.seed, it);
                row.has_test = true;
            }
            result.trace.rows.push_back(row);
        }
        if (checkpoint && cfg.checkpoint_stride > 0 && it > 0 && it % cfg.checkpoint_stride == 0)
            checkpoint(it, params.template cast<double>());

        if (cfg.optimizer == Optimizer::adam)
            adam_step<Real>(adam, params.flat(), grad, cfg.learning_rate);
        else
            sgd_step<Real>(params.flat(), grad, cfg.learning_rate);
    }
    result.params = params.template cast<double>();
    if (checkpoint) checkpoint(cfg.iterations, result.params);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace detail

/// Minimizes the discrete energy for cfg.iterations optimizer steps. In resample
/// mode iteration i draws its batch from (seed, i); in fixed-midpoint mode one
/// midpoint batch is reused. Returns the parameters after the last step.
inline TrainResult train(const ProblemSpec& problem, const NetParams<double>& initial, const TrainConfig& cfg,
                         const CheckpointFn& checkpoint = {}) {
    cfg.validate();
    if (initial.dim() != problem.dim) throw ShapeError("network dimension does not match the problem");
    if (cfg.precision == Precision::float32) return detail::train_impl<float>(problem, initial, cfg, checkpoint);
    return detail::train_impl<double>(problem, initial, cfg, checkpoint);
}

struct ErrorMetrics {
    double rel_linf = 0.0;
    double rel_l2 = 0.0;
};

/// Relative discrete L-infinity and L2 errors against the exact solution on
/// n_test uniform domain points.
inline ErrorMetrics evaluate_errors(const ProblemSpec& problem, const NetParams<double>& params, std::size_t n_test, Rng& rng) {
    if (n_test < 1) throw ConfigError("evaluate_errors: n_test must be >= 1");
    if (params.dim() != problem.dim) throw ShapeError("network dimension does not match the problem");
    const auto pts = sample_domain(problem.domain, n_test, rng);
    double max_err = 0.0, max_u = 0.0, sum_err = 0.0, sum_u = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto x = pts[i];
        const double exact = problem.u(x);
        const double approx = evaluate_fast<double>(params, x.data(), problem.interface.phi(x), nullptr, nullptr);
        const double e = approx - exact;
        max_err = std::max(max_err, std::abs(e));
        max_u = std::max(max_u, std::abs(exact));
        sum_err += e * e;
        sum_u += exact * exact;
    }
    return {max_err / max_u, std::sqrt(sum_err / sum_u)};
}

}  // namespace sritz
