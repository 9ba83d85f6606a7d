// Command-line front end: train, eval, ib, oracle and experiment subcommands.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sritz/experiment.hpp"

using namespace sritz;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> precision;

    void attach(CLI::App* app) {
        app->add_option("--seed", seed, "Base RNG seed");
        app->add_option("--out", out, "Output directory");
        app->add_option("--precision", precision, "double or single")->check(CLI::IsMember({"double", "single"}));
    }

    void apply(RunConfig& rc, const std::string& default_name) const {
        if (seed) rc.train.seed = *seed;
        if (precision) rc.train.precision = precision_from_string(*precision);
        if (out) rc.out_dir = *out;
        else if (rc.out_dir == "runs") rc.out_dir = default_out_root() / default_name;
    }
};

RunConfig base_config(const std::string& preset_name, const std::string& config_path) {
    RunConfig rc = preset_name.empty() ? RunConfig{} : preset(preset_name);
    if (!config_path.empty()) rc = load_run_config(config_path, rc);
    return rc;
}

void print_summary(const ExperimentResult& res, const fs::path& dir) {
    for (const auto& r : res.reports)
        std::cout << r.label << ": rel_Linf=" << r.rel_linf << " rel_L2=" << r.rel_l2 << " final_loss=" << r.final_loss
                  << " seconds=" << r.seconds << (r.diverged ? " (diverged)" : "") << '\n';
    for (const auto& r : res.ib) std::cout << "ib m=" << r.m << ": rel_Linf=" << r.rel_linf << '\n';
    if (res.oracle) std::cout << "oracle energy=" << res.oracle->energy << (res.oracle->converged ? "" : " (not converged)") << '\n';
    std::cout << "wrote " << (dir / "summary.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shallow Ritz solver for elliptic problems with interface sources"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one network (or one per seed)");
    std::string train_preset, train_config, train_problem;
    std::optional<int> train_width;
    std::optional<std::size_t> train_iters;
    std::optional<double> train_beta, train_lr;
    std::vector<std::size_t> train_batch;
    std::optional<std::string> train_opt, train_sampling;
    Overrides train_ov;
    train_cmd->add_option("--preset", train_preset, "Start from a named preset");
    train_cmd->add_option("--config", train_config, "Config file")->check(CLI::ExistingFile);
    train_cmd->add_option("--problem", train_problem, "example1..example5");
    train_cmd->add_option("--width", train_width, "Hidden width N");
    train_cmd->add_option("--iterations", train_iters, "Optimizer steps");
    train_cmd->add_option("--beta", train_beta, "Boundary penalty");
    train_cmd->add_option("--learning-rate", train_lr, "Step size");
    train_cmd->add_option("--batch", train_batch, "M M_interface M_boundary")->expected(3);
    train_cmd->add_option("--optimizer", train_opt, "adam or sgd");
    train_cmd->add_option("--sampling", train_sampling, "resample or fixed-midpoint");
    train_ov.attach(train_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model against the exact solution");
    std::string eval_model, eval_problem, eval_cross;
    std::size_t eval_points = 100000;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--model", eval_model, "model.json")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--problem", eval_problem, "example1..example5")->required();
    eval_cmd->add_option("--points", eval_points, "Number of uniform test points");
    eval_cmd->add_option("--seed", eval_seed, "Seed of the test points");
    eval_cmd->add_option("--cross-section", eval_cross, "Write cross sections to this CSV (2D only)");

    // ib
    auto* ib_cmd = app.add_subcommand("ib", "Immersed-boundary finite-difference baseline");
    int ib_example = 1, ib_m = 80, ib_mg = 0;
    std::string ib_csv;
    ib_cmd->add_option("--example", ib_example, "Problem id (1 or 2)");
    ib_cmd->add_option("--m", ib_m, "Grid points per axis")->check(CLI::PositiveNumber);
    ib_cmd->add_option("--m-gamma", ib_mg, "Markers on the interface (default m)");
    ib_cmd->add_option("--csv", ib_csv, "Write the grid solution to this CSV");

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "Dense-quadrature energy of the exact solution or a model");
    std::string oracle_problem = "example1", oracle_model;
    double oracle_beta = 200;
    int oracle_res = 128;
    oracle_cmd->add_option("--problem", oracle_problem, "example1..example5");
    oracle_cmd->add_option("--beta", oracle_beta, "Boundary penalty");
    oracle_cmd->add_option("--model", oracle_model, "Evaluate this model instead of the exact solution")
        ->check(CLI::ExistingFile);
    oracle_cmd->add_option("--resolution", oracle_res, "Starting resolution (>= 128)");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Run a preset or configured experiment");
    std::string exp_preset, exp_config;
    Overrides exp_ov;
    exp_cmd->add_option("--preset", exp_preset, "Preset name")->check(CLI::IsMember(preset_names()));
    exp_cmd->add_option("--config", exp_config, "Config file")->check(CLI::ExistingFile);
    exp_ov.attach(exp_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            RunConfig rc = base_config(train_preset, train_config);
            rc.kind = ExperimentKind::train;
            if (!train_problem.empty()) rc.problem = train_problem;
            if (train_width) rc.width = *train_width;
            if (train_iters) rc.train.iterations = *train_iters;
            if (train_beta) rc.train.beta = *train_beta;
            if (train_lr) rc.train.learning_rate = *train_lr;
            if (!train_batch.empty()) rc.train.batch = {train_batch[0], train_batch[1], train_batch[2]};
            if (train_opt) rc.train.optimizer = optimizer_from_string(*train_opt);
            if (train_sampling) rc.train.sampling = sampling_from_string(*train_sampling);
            train_ov.apply(rc, rc.problem);
            print_summary(run_experiment(rc), rc.out_dir);
        } else if (*eval_cmd) {
            const auto problem = make_example(eval_problem);
            const auto params = load_checkpoint(eval_model);
            Rng rng(eval_seed, Stream::eval);
            const auto err = evaluate_errors(problem, params, eval_points, rng);
            json j{{"problem", problem.name}, {"N", params.width()},
                   {"N_p", params.size()},    {"points", eval_points},
                   {"rel_Linf", err.rel_linf}, {"rel_L2", err.rel_l2}};
            std::cout << j.dump(2) << '\n';
            if (!eval_cross.empty()) write_cross_sections_csv(eval_cross, params, problem, 201);
        } else if (*ib_cmd) {
            const auto problem = make_example(ib_example);
            auto [rep, sol] = run_ib(problem, ib_m, ib_mg);
            std::cout << to_json(rep).dump(2) << '\n';
            if (!ib_csv.empty()) write_grid_csv(ib_csv, sol, problem);
        } else if (*oracle_cmd) {
            const auto problem = make_example(oracle_problem);
            std::optional<NetParams<double>> params;
            if (!oracle_model.empty()) params = load_checkpoint(oracle_model);
            const auto field = params ? network_field(*params, problem.interface.phi) : exact_field(problem);
            const auto r = energy_oracle(problem, field, oracle_beta, oracle_res);
            json j{{"problem", problem.name},
                   {"beta", oracle_beta},
                   {"energy", r.energy},
                   {"previous", r.previous},
                   {"resolution", r.resolution},
                   {"converged", r.converged},
                   {"domain_term", r.terms.domain},
                   {"interface_term", r.terms.interface},
                   {"boundary_term", r.terms.boundary}};
            std::cout << j.dump(2) << '\n';
            if (!r.converged) std::cerr << "warning: oracle did not converge within the resolution cap\n";
        } else if (*exp_cmd) {
            if (exp_preset.empty() && exp_config.empty()) throw ConfigError("experiment needs --preset or --config");
            RunConfig rc = base_config(exp_preset, exp_config);
            exp_ov.apply(rc, exp_preset.empty() ? to_string(rc.kind) : exp_preset);
            print_summary(run_experiment(rc), rc.out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
