#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sritz/oracle.hpp"
#include "sritz/trainer.hpp"

using namespace sritz;

namespace {

NetParams<double> seeded_params(const ProblemSpec& p, int n, std::uint64_t seed) {
    NetParams<double> net(p.dim, n);
    Rng rng(seed, Stream::init);
    initialize(net, rng);
    return net;
}

TrainConfig short_config(std::size_t iters) {
    TrainConfig cfg;
    cfg.iterations = iters;
    cfg.batch = {100, 40, 40};
    cfg.trace_stride = 10;
    return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
    std::vector<double> p{0.3, -1.2, 4.0};
    const auto p0 = p;
    AdamState<double> st(3);
    std::vector<double> g(3, 0.0);
    adam_step<double>(st, p, g, 5e-3);
    EXPECT_EQ(p, p0);
    EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
    for (double g0 : {3.7, -0.02, 1e4}) {
        std::vector<double> p{1.0};
        AdamState<double> st(1);
        std::vector<double> g{g0};
        adam_step<double>(st, p, g, 5e-3);
        EXPECT_NEAR(p[0] - 1.0, -5e-3 * (g0 > 0 ? 1 : -1), 5e-3 * 1e-6);
        for (double v : st.v) EXPECT_GE(v, 0.0);
    }
}

TEST(Adam, MatchesScriptedTrajectory) {
    // quadratic f(p) = sum a_i p_i^2 / 2, gradient a_i p_i
    const std::vector<double> a{1.0, 10.0, 0.1, 3.0};
    std::vector<double> p{1.0, -2.0, 0.5, 3.0};
    std::vector<double> ref = p, m(4, 0.0), v(4, 0.0);
    AdamState<double> st(4);
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 10; ++t) {
        std::vector<double> g(4), gr(4);
        for (int i = 0; i < 4; ++i) g[i] = a[i] * p[i], gr[i] = a[i] * ref[i];
        adam_step<double>(st, p, g, lr);
        for (int i = 0; i < 4; ++i) {
            m[i] = b1 * m[i] + (1 - b1) * gr[i];
            v[i] = b2 * v[i] + (1 - b2) * gr[i] * gr[i];
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            ref[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p[i], ref[i], 1e-12);
    EXPECT_EQ(st.t, 10u);
}

TEST(Adam, RejectsNonFiniteAndShapeMismatch) {
    std::vector<double> p{1.0, 2.0};
    AdamState<double> st(2);
    std::vector<double> g{1.0, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_THROW(adam_step<double>(st, p, g, 1e-3), TrainingError);
    std::vector<double> short_g{1.0};
    EXPECT_THROW(adam_step<double>(st, p, short_g, 1e-3), ShapeError);
}

TEST(Sgd, Steps) {
    std::vector<double> p{0.5, -0.5};
    std::vector<double> zero(2, 0.0);
    sgd_step<double>(p, zero, 0.1);
    EXPECT_EQ(p, (std::vector<double>{0.5, -0.5}));
    std::vector<double> q(2, 0.0), g{1.5, -2.25};
    sgd_step<double>(q, g, 1.0);
    EXPECT_EQ(q, (std::vector<double>{-1.5, 2.25}));
    std::vector<double> bad{std::numeric_limits<double>::infinity(), 0.0};
    EXPECT_THROW(sgd_step<double>(q, bad, 1.0), TrainingError);
}

TEST(Trainer, ConfigValidation) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 4, 1);
    auto cfg = short_config(1);
    cfg.iterations = 0;
    EXPECT_THROW(train(problem, net, cfg), ConfigError);
    cfg = short_config(1);
    cfg.beta = 0;
    EXPECT_THROW(train(problem, net, cfg), ConfigError);
    cfg = short_config(1);
    cfg.learning_rate = -1;
    EXPECT_THROW(train(problem, net, cfg), ConfigError);
    cfg = short_config(1);
    cfg.batch.interface = 0;
    EXPECT_THROW(train(problem, net, cfg), ConfigError);
    EXPECT_THROW(train(make_example(4), net, short_config(1)), ShapeError);
    EXPECT_THROW(sampling_from_string("sobol"), ConfigError);
    EXPECT_EQ(sampling_from_string("resample-per-iteration"), SamplingMode::resample);
    EXPECT_EQ(precision_from_string("single"), Precision::float32);
}

TEST(Trainer, SingleIterationIsOneAdamStep) {
    const auto problem = make_example(2);
    NetParams<double> zero(2, 6);
    auto cfg = short_config(1);
    cfg.seed = 17;
    const auto res = train(problem, zero, cfg);

    Rng rng(17, Stream::batch, 0);
    const auto batch = sample_batch(problem, cfg.batch, rng);
    const auto [loss, grad] = loss_param_grad(zero, batch, problem, cfg.beta);
    auto expected = zero;
    AdamState<double> st(zero.size());
    adam_step<double>(st, expected.flat(), grad, cfg.learning_rate);
    EXPECT_EQ(res.params, expected);
    ASSERT_EQ(res.trace.history.size(), 1u);
    EXPECT_EQ(res.trace.history[0], loss);

    cfg.optimizer = Optimizer::sgd;
    const auto res_sgd = train(problem, zero, cfg);
    auto expected_sgd = zero;
    sgd_step<double>(expected_sgd.flat(), grad, cfg.learning_rate);
    EXPECT_EQ(res_sgd.params, expected_sgd);
}

TEST(Trainer, SeedReproducibilityIsBitwise) {
    for (auto mode : {SamplingMode::resample, SamplingMode::fixed_midpoint}) {
        const auto problem = make_example(1);
        const auto net = seeded_params(problem, 8, 3);
        auto cfg = short_config(300);
        cfg.sampling = mode;
        if (mode == SamplingMode::fixed_midpoint) cfg.batch = {400, 40, 40};
        const auto a = train(problem, net, cfg);
        const auto b = train(problem, net, cfg);
        EXPECT_EQ(a.params, b.params);
        EXPECT_EQ(a.trace.history, b.trace.history);
        cfg.seed = 4;
        const auto c = train(problem, net, cfg);
        if (mode == SamplingMode::resample) EXPECT_NE(a.params, c.params);
        else EXPECT_EQ(a.params, c.params);  // the midpoint batch does not depend on the seed
    }
}

TEST(Trainer, NonFiniteLossAborts) {
    const auto problem = make_example(1);
    auto net = seeded_params(problem, 4, 1);
    net.b2() = std::numeric_limits<double>::quiet_NaN();
    try {
        train(problem, net, short_config(5));
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.iteration, 0u);
        EXPECT_NE(std::string(e.what()).find("domain"), std::string::npos);
    }
}

TEST(Trainer, TraceRowsAndCheckpoints) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 5, 2);
    auto cfg = short_config(95);
    cfg.checkpoint_stride = 20;
    cfg.track_test_loss = true;
    cfg.test_points = 2000;
    std::vector<std::size_t> saved;
    const auto res = train(problem, net, cfg, [&](std::size_t it, const NetParams<double>&) { saved.push_back(it); });
    ASSERT_FALSE(res.trace.rows.empty());
    for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
        EXPECT_LT(res.trace.rows[i - 1].iteration, res.trace.rows[i].iteration);
    EXPECT_EQ(res.trace.rows.back().iteration, 94u);
    EXPECT_EQ(res.trace.rows.size(), 11u);  // 0, 10, ..., 90 and 94
    for (const auto& row : res.trace.rows) {
        EXPECT_TRUE(row.has_test);
        EXPECT_DOUBLE_EQ(row.train.total(), res.trace.history[row.iteration]);
    }
    EXPECT_EQ(saved, (std::vector<std::size_t>{20, 40, 60, 80, 95}));
    EXPECT_EQ(res.trace.history.size(), 95u);
}

TEST(Trainer, FixedModeReusesMidpointBatch) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 6, 5);
    auto cfg = short_config(1);
    cfg.sampling = SamplingMode::fixed_midpoint;
    cfg.batch = {1600, 160, 160};
    const auto res = train(problem, net, cfg);
    const auto terms = loss_value(net, prepare_batch<double>(problem, midpoint_batch(problem, cfg.batch), cfg.beta));
    EXPECT_DOUBLE_EQ(res.trace.history[0], terms.total());
    cfg.batch.domain = 1601;
    EXPECT_THROW(train(problem, net, cfg), ConfigError);
}

TEST(Trainer, SinglePrecisionTrains) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 8, 6);
    auto cfg = short_config(200);
    cfg.precision = Precision::float32;
    const auto res = train(problem, net, cfg);
    for (double v : res.params.flat()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(res.trace.history.back(), res.trace.history.front());
}

TEST(Trainer, SmoothedResampleLossDoesNotIncrease) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 10, 1);
    auto cfg = short_config(6000);
    cfg.batch = {200, 80, 80};
    const auto res = train(problem, net, cfg);
    const auto& h = res.trace.history;
    auto window_mean = [&](std::size_t end) {
        double s = 0;
        for (std::size_t i = end - 500; i < end; ++i) s += h[i];
        return s / 500;
    };
    double prev = window_mean(1500);
    for (std::size_t end = 2000; end <= h.size(); end += 500) {
        const double cur = window_mean(end);
        EXPECT_LE(cur, prev + 0.05 * std::abs(prev)) << "window ending at " << end;
        prev = cur;
    }
}

TEST(Trainer, ErrorMetrics) {
    auto problem = make_example(1);
    const auto net = seeded_params(problem, 6, 9);
    // a problem whose "exact" solution is the network itself has zero error
    auto self = problem;
    auto as_exact = [&](std::span<const double> x) { return forward(net, x, problem.interface.phi); };
    self.inner.u = as_exact;
    self.outer.u = as_exact;
    Rng rng(1, Stream::eval);
    const auto e = evaluate_errors(self, net, 5000, rng);
    EXPECT_EQ(e.rel_linf, 0.0);
    EXPECT_EQ(e.rel_l2, 0.0);

    // direct formulas on a fixed point set
    Rng r1(2, Stream::eval), r2(2, Stream::eval);
    const auto got = evaluate_errors(problem, net, 3000, r1);
    const auto pts = sample_domain(problem.domain, 3000, r2);
    double me = 0, mu = 0, se = 0, su = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double u = problem.u(pts[i]), a = forward(net, pts[i], problem.interface.phi);
        me = std::max(me, std::abs(a - u));
        mu = std::max(mu, std::abs(u));
        se += (a - u) * (a - u);
        su += u * u;
    }
    EXPECT_NEAR(got.rel_linf, me / mu, 1e-14);
    EXPECT_NEAR(got.rel_l2, std::sqrt(se / su), 1e-14);
    EXPECT_THROW(evaluate_errors(problem, net, 0, r1), ConfigError);
}

TEST(Trainer, TestingLossIsDeterministic) {
    const auto problem = make_example(1);
    const auto net = seeded_params(problem, 6, 9);
    const auto a = testing_loss(problem, net, 200, 5000, 1, 7);
    const auto b = testing_loss(problem, net, 200, 5000, 1, 7);
    EXPECT_EQ(a.total(), b.total());
}

TEST(Oracle, ZeroFunctionGivesBoundaryPenaltyOnly) {
    const auto problem = make_example(1);
    const FieldFn zero = [](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        return 0.0;
    };
    const double beta = 200;
    const auto r = energy_oracle(problem, zero, beta);
    EXPECT_TRUE(r.converged);
    // independent: 4 edges by symmetry, int_{-1}^{1} ln(1 + s^2)^2 ds via Simpson
    const int n = 200000;
    const double h = 2.0 / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
        const double t = -1 + i * h;
        const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        s += w * std::pow(std::log(1 + t * t), 2);
    }
    const double expected = beta * 4 * s * h / 3;
    EXPECT_NEAR(r.energy / expected, 1.0, 1e-6);
    EXPECT_EQ(r.terms.domain, 0.0);
    EXPECT_EQ(r.terms.interface, 0.0);
}

TEST(Oracle, ExactSolutionEnergyOfExampleOne) {
    const auto problem = make_example(1);
    const auto r = energy_oracle(problem, exact_field(problem), 200);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.terms.boundary, 0.0);
    // int_Gamma c u = -4 * pi * (-ln 0.25)
    EXPECT_NEAR(r.terms.interface, -4 * pi * -std::log(0.25), 1e-6);
    // domain: int 1/2|grad u|^2 + u f with f = 0 and |grad u|^2 = 4 / r^2 outside the circle;
    // by Green's theorem int_{outside} |grad u|^2 = int_dOmega u du/dn - int_Gamma u du/dr
    EXPECT_NEAR(r.terms.domain + r.terms.interface, r.energy, 1e-12);
}

TEST(Oracle, ExactSolutionIsNearMinimal) {
    // Bumps are compactly supported inside the domain, so they do not touch the
    // boundary penalty and the exact solution minimizes the energy among u + bump.
    for (int id : {1, 2, 3}) {
        const auto problem = make_example(id);
        const double beta = 200;
        const double base = energy_oracle(problem, exact_field(problem), beta).energy;
        Rng rng(40, Stream::oracle, id);
        for (int t = 0; t < 20; ++t) {
            const double cx = rng.uniform(-0.3, 0.3), cy = rng.uniform(-0.3, 0.3);
            const double amp = rng.uniform(-0.05, 0.05), w = rng.uniform(0.15, 0.35);
            const FieldFn bumped = [&](std::span<const double> x, std::span<double> g) {
                const auto& b = problem.branch(x);
                b.grad(x, g);
                const double dx = x[0] - cx, dy = x[1] - cy;
                const double q = (dx * dx + dy * dy) / (w * w);
                if (q >= 1.0) return b.u(x);
                // exp(1 - 1/(1 - q)), smooth with support in the disk of radius w
                const double e = amp * std::exp(1.0 - 1.0 / (1.0 - q));
                const double de_dq = -e / ((1.0 - q) * (1.0 - q));
                g[0] += de_dq * 2 * dx / (w * w);
                g[1] += de_dq * 2 * dy / (w * w);
                return b.u(x) + e;
            };
            const double perturbed = energy_oracle(problem, bumped, beta).energy;
            EXPECT_GE(perturbed, base - 1e-3) << "example " << id << " trial " << t;
        }
    }
}

TEST(Oracle, ThreeDimensionalExactEnergyConverges) {
    const auto problem = make_example(4);
    const auto r = energy_oracle(problem, exact_field(problem), 100);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(std::isfinite(r.energy));
}

TEST(Oracle, MonteCarloLossAveragesToOracle) {
    // The discrete loss is an unbiased estimate of the penalized energy.
    const auto problem = make_example(2);
    NetParams<double> net(2, 8);
    Rng init(3, Stream::init);
    initialize(net, init);
    const double beta = 20;
    const double dense = energy_oracle(problem, network_field(net, problem.interface.phi), beta).energy;
    const int reps = 200;
    double s = 0, s2 = 0;
    for (int i = 0; i < reps; ++i) {
        const double v = testing_loss(problem, net, beta, 2000, 5, i).total();
        s += v;
        s2 += v * v;
    }
    const double mean = s / reps;
    const double se = std::sqrt((s2 / reps - mean * mean) / reps);
    EXPECT_LE(std::abs(mean - dense), 5 * se) << "mean " << mean << " dense " << dense;
}

TEST(Oracle, Errors) {
    const auto problem = make_example(1);
    EXPECT_THROW(energy_oracle(problem, exact_field(problem), 200, 64), ConfigError);
    EXPECT_THROW(energy_oracle(problem, exact_field(problem), 0.0), DomainError);
}
