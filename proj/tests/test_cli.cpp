#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "sritz/experiment.hpp"

using namespace sritz;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sritz_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Config, ParsesSectionsAndLists) {
    const auto dir = temp_dir("config");
    const auto path = write_file(dir, "run.toml", R"(
problem = "example3"
kind = "beta-sweep"
width = 40
augmented = false
seeds = 2
oracle = true

[train]
optimizer = "sgd"
learning_rate = 1e-3
iterations = 1234
beta = 50
batch = [400, 80, 90]
sampling = "fixed-midpoint"
seed = 9
precision = "single"
track_test_loss = true

[experiment]
betas = [1, 10]
ib_m = [40, 80]
)");
    const auto rc = load_run_config(path);
    EXPECT_EQ(rc.problem, "example3");
    EXPECT_EQ(rc.kind, ExperimentKind::beta_sweep);
    EXPECT_EQ(rc.width, 40);
    EXPECT_FALSE(rc.augmented);
    EXPECT_EQ(rc.seeds, 2);
    EXPECT_TRUE(rc.oracle);
    EXPECT_EQ(rc.train.optimizer, Optimizer::sgd);
    EXPECT_DOUBLE_EQ(rc.train.learning_rate, 1e-3);
    EXPECT_EQ(rc.train.iterations, 1234u);
    EXPECT_EQ(rc.train.beta, 50.0);
    EXPECT_EQ(rc.train.batch, (BatchSizes{400, 80, 90}));
    EXPECT_EQ(rc.train.sampling, SamplingMode::fixed_midpoint);
    EXPECT_EQ(rc.train.seed, 9u);
    EXPECT_EQ(rc.train.precision, Precision::float32);
    EXPECT_TRUE(rc.train.track_test_loss);
    EXPECT_EQ(rc.betas, (std::vector<double>{1, 10}));
    EXPECT_EQ(rc.ib_m, (std::vector<int>{40, 80}));
}

TEST(Config, PresetKeyIsTheBase) {
    const auto dir = temp_dir("preset");
    const auto path = write_file(dir, "p.toml", "preset = \"fig3\"\nseeds = 2\n[train]\niterations = 10\n");
    const auto rc = load_run_config(path);
    EXPECT_EQ(rc.kind, ExperimentKind::optimizer_compare);
    EXPECT_EQ(rc.seeds, 2);
    EXPECT_EQ(rc.train.iterations, 10u);
    EXPECT_EQ(rc.train.batch, (BatchSizes{200, 80, 80}));
}

TEST(Config, Errors) {
    const auto dir = temp_dir("errors");
    EXPECT_THROW(load_run_config(dir / "missing.toml"), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "a.toml", "colour = 3\n")), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "b.toml", "[train]\nbatch = [1, 2]\n")), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "c.toml", "width = twenty\n")), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "d.toml", "kind = \"dance\"\n")), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "e.toml", "[other]\nx = 1\n")), ConfigError);
    EXPECT_THROW(load_run_config(write_file(dir, "f.toml", "[train]\niterations = -5\n")), ConfigError);
    RunConfig rc;
    rc.problem = "example7";
    EXPECT_THROW(rc.validate(), ConfigError);
    EXPECT_THROW(preset("table9"), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(SRITZ_CONFIG_DIR)) {
        if (entry.path().extension() != ".toml") continue;
        const auto rc = load_run_config(entry.path());
        EXPECT_NO_THROW(rc.validate()) << entry.path();
        ++n;
    }
    EXPECT_GE(n, 3);
}

TEST(Config, AllPresetsValidate) {
    for (const auto& name : preset_names()) {
        const auto rc = preset(name);
        EXPECT_NO_THROW(rc.validate()) << name;
    }
    EXPECT_EQ(preset("example5").train.batch, (BatchSizes{500, 1065, 1065}));
    EXPECT_EQ(preset("table2").seeds, 3);
    EXPECT_EQ(preset("fig3").seeds, 3);
}

TEST(Report, RoundTrip) {
    ErrorReport r;
    r.label = "run";
    r.problem = "example2";
    r.d = 2;
    r.N = 30;
    r.N_p = 151;
    r.batch = {1600, 160, 160};
    r.beta = 200;
    r.seed = 12345678901234ULL;
    r.rel_linf = 1.0 / 3.0;
    r.rel_l2 = 0.1;
    r.seconds = 12.5;
    r.final_loss = -8.123456789012345;
    r.trailing_loss = std::numeric_limits<double>::infinity();
    r.test_loss = -7.5;
    const auto back = report_from_json(json::parse(to_json(r).dump()));
    EXPECT_EQ(back, r);

    r.N_p = 150;
    EXPECT_THROW(report_from_json(to_json(r)), ShapeError);
    auto j = to_json(r);
    j.erase("beta");
    EXPECT_THROW(report_from_json(j), ConfigError);
}

TEST(Report, PlainNetworkCount) {
    ErrorReport r;
    r.label = "plain";
    r.problem = "example2";
    r.d = 2;
    r.N = 30;
    r.augmented = false;
    r.N_p = 121;
    EXPECT_NO_THROW(report_from_json(to_json(r)));
}

TEST(CrossSection, ExactPlugInAndOrigin) {
    const auto problem = make_example(3);
    auto exact = [&](std::span<const double> x) { return problem.u(x); };
    const auto rows = emit_cross_sections(exact, problem, 'x', 101);
    ASSERT_EQ(rows.size(), 101u);
    for (const auto& r : rows) EXPECT_EQ(r.u_s, r.u_exact);
    // the line y = 0 spans r(pi) = 1.2 on the left and r(0) = 0.8 on the right
    EXPECT_NEAR(rows.front().coordinate, -1.2, 1e-12);
    EXPECT_NEAR(rows.back().coordinate, 0.8, 1e-12);
    const auto one = emit_cross_sections(exact, problem, 'y', 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].coordinate, 0.0);
    EXPECT_THROW(emit_cross_sections(exact, make_example(4), 'x', 5), UnsupportedError);
    EXPECT_THROW(emit_cross_sections(exact, problem, 'z', 5), ConfigError);
}

TEST(CrossSection, NetworkVersionMatchesForward) {
    const auto problem = make_example(1);
    NetParams<double> p(2, 5);
    Rng rng(1, Stream::init);
    initialize(p, rng);
    const auto rows = emit_cross_sections(p, problem, 'y', 11);
    for (const auto& r : rows) {
        const double x[2] = {0.0, r.coordinate};
        EXPECT_EQ(r.u_s, forward(p, x, problem.interface.phi));
    }
}

TEST(Experiment, TrainWritesArtifactsReproducibly) {
    const auto dir = temp_dir("train");
    RunConfig rc = preset("example1");
    rc.train.iterations = 300;
    rc.train.trace_stride = 50;
    rc.train.checkpoint_stride = 100;
    rc.out_dir = dir / "a";
    const auto a = run_experiment(rc);
    ASSERT_EQ(a.reports.size(), 1u);
    const auto run = rc.out_dir / "run";
    for (auto f : {"report.json", "trace.csv", "model.json", "cross_section.csv"}) EXPECT_TRUE(fs::exists(run / f)) << f;
    EXPECT_TRUE(fs::exists(run / "checkpoints" / "model_100.json"));
    EXPECT_TRUE(fs::exists(rc.out_dir / "summary.json"));

    const auto trace = lines(run / "trace.csv");
    EXPECT_EQ(trace.front(), "iteration,train_loss,test_loss,domain_term,interface_term,boundary_term");
    EXPECT_EQ(trace.size(), 1u + 7u);  // 0, 50, ..., 250 and 299

    const auto report = report_from_json(read_json(run / "report.json"));
    EXPECT_EQ(report, a.reports[0]);
    EXPECT_EQ(report.N_p, 101u);

    rc.out_dir = dir / "b";
    const auto b = run_experiment(rc);
    EXPECT_EQ(b.reports[0].rel_l2, a.reports[0].rel_l2);
    EXPECT_EQ(b.reports[0].final_loss, a.reports[0].final_loss);
    EXPECT_EQ(load_checkpoint(dir / "a" / "run" / "model.json"), load_checkpoint(dir / "b" / "run" / "model.json"));
}

TEST(Experiment, ComparisonKindsProduceOneReportPerRun) {
    const auto dir = temp_dir("kinds");
    RunConfig rc;
    rc.problem = "example1";
    rc.width = 4;
    rc.plain_width = 3;
    rc.train.iterations = 20;
    rc.train.batch = {16, 8, 8};
    rc.seeds = 2;
    rc.error_points = 500;

    rc.kind = ExperimentKind::ablate_phi;
    rc.out_dir = dir / "ablate";
    auto res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 4u);
    EXPECT_TRUE(res.reports[0].augmented);
    EXPECT_FALSE(res.reports[3].augmented);
    EXPECT_EQ(res.reports[3].N_p, 3u * 4 + 1);

    rc.kind = ExperimentKind::beta_sweep;
    rc.seeds = 1;
    rc.betas = {1, 10};
    rc.out_dir = dir / "beta";
    res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 2u);
    EXPECT_EQ(res.reports[1].beta, 10.0);

    rc.kind = ExperimentKind::optimizer_compare;
    rc.out_dir = dir / "opt";
    res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 2u);
    EXPECT_EQ(res.reports[1].optimizer, "sgd");

    rc.kind = ExperimentKind::ib_compare;
    rc.ib_m = {20};
    rc.widths = {3, 4};
    rc.out_dir = dir / "ib";
    res = run_experiment(rc);
    ASSERT_EQ(res.ib.size(), 1u);
    EXPECT_EQ(res.ib[0].N_deg, 400u);
    EXPECT_EQ(res.reports.size(), 2u);
    EXPECT_TRUE(fs::exists(rc.out_dir / "ib_m20" / "report.json"));

    rc.kind = ExperimentKind::fixed_vs_resample;
    rc.train.batch = {16, 8, 8};
    rc.resample_domain = 32;
    rc.train.test_points = 1000;
    rc.out_dir = dir / "fixed";
    res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 2u);
    ASSERT_TRUE(res.oracle.has_value());
    EXPECT_EQ(res.reports[0].sampling, "fixed-midpoint");
    EXPECT_EQ(res.reports[1].batch.domain, 32u);
    EXPECT_TRUE(res.reports[0].test_loss.has_value());
    EXPECT_EQ(res.reports[0].oracle_energy, res.oracle->energy);
}

TEST(Experiment, PointsSweepUsesRatioRule) {
    const auto dir = temp_dir("points");
    RunConfig rc = preset("table7");
    rc.train.iterations = 5;
    rc.error_points = 100;
    rc.out_dir = dir;
    const auto res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 3u);
    EXPECT_EQ(res.reports[0].batch, (BatchSizes{100, 278, 278}));
    EXPECT_EQ(res.reports[1].batch, (BatchSizes{200, 496, 496}));
    EXPECT_EQ(res.reports[2].batch, (BatchSizes{500, 1065, 1065}));
}

TEST(Experiment, DivergentRunIsReportedNotThrown) {
    const auto dir = temp_dir("diverge");
    RunConfig rc;
    rc.problem = "example1";
    rc.width = 4;
    rc.train.iterations = 200;
    rc.train.batch = {16, 8, 8};
    rc.train.optimizer = Optimizer::sgd;
    rc.train.learning_rate = 1e6;
    rc.out_dir = dir;
    const auto res = run_experiment(rc);
    ASSERT_EQ(res.reports.size(), 1u);
    EXPECT_TRUE(res.reports[0].diverged);
    EXPECT_TRUE(std::isinf(res.reports[0].trailing_loss));
    EXPECT_TRUE(fs::exists(dir / "run" / "error.txt"));
    EXPECT_NO_THROW(report_from_json(read_json(dir / "run" / "report.json")));
}

TEST(Experiment, IbReportFields) {
    auto [rep, sol] = run_ib(make_example(1), 40);
    EXPECT_EQ(rep.m, 40);
    EXPECT_EQ(rep.m_gamma, 40);
    EXPECT_EQ(rep.N_deg, 1600u);
    const auto j = to_json(rep);
    for (auto key : {"m", "m_gamma", "N_deg", "rel_Linf"}) EXPECT_TRUE(j.contains(key)) << key;
    const auto dir = temp_dir("grid");
    write_grid_csv(dir / "grid.csv", sol, make_example(1));
    EXPECT_EQ(lines(dir / "grid.csv").size(), 1u + 1600u);
}

TEST(Experiment, OutputRootFromEnvironment) {
    setenv("SRITZ_OUT_ROOT", "/tmp/sritz_root", 1);
    EXPECT_EQ(default_out_root(), fs::path("/tmp/sritz_root"));
    unsetenv("SRITZ_OUT_ROOT");
    EXPECT_EQ(default_out_root(), fs::path("runs"));
}
