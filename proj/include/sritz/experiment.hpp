#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sritz/geometry.hpp"
#include "sritz/ib2d.hpp"
#include "sritz/network.hpp"
#include "sritz/oracle.hpp"
#include "sritz/trainer.hpp"

namespace sritz {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class ExperimentKind { train, ablate_phi, beta_sweep, optimizer_compare, fixed_vs_resample, ib_compare, points_sweep };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::train: return "train";
        case ExperimentKind::ablate_phi: return "ablate-phi";
        case ExperimentKind::beta_sweep: return "beta-sweep";
        case ExperimentKind::optimizer_compare: return "optimizer-compare";
        case ExperimentKind::fixed_vs_resample: return "fixed-vs-resample";
        case ExperimentKind::ib_compare: return "ib-compare";
        case ExperimentKind::points_sweep: return "points-sweep";
    }
    return "train";
}

inline ExperimentKind experiment_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::train, ExperimentKind::ablate_phi, ExperimentKind::beta_sweep,
                   ExperimentKind::optimizer_compare, ExperimentKind::fixed_vs_resample, ExperimentKind::ib_compare,
                   ExperimentKind::points_sweep})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

inline InitScheme init_from_string(const std::string& s) {
    if (s == "uniform") return InitScheme::uniform;
    if (s == "gaussian") return InitScheme::gaussian;
    throw ConfigError("unknown init scheme '" + s + "'");
}
inline std::string to_string(InitScheme s) { return s == InitScheme::uniform ? "uniform" : "gaussian"; }

struct RunConfig {
    std::string problem = "example1";
    ExperimentKind kind = ExperimentKind::train;
    int width = 20;
    bool augmented = true;
    Activation activation = Activation::sigmoid;
    InitScheme init = InitScheme::uniform;
    TrainConfig train;
    fs::path out_dir = "runs";
    int seeds = 1;                     // runs use train.seed, train.seed + 1, ...
    std::size_t error_points = 0;      // 0: 100 M
    bool oracle = false;               // energy oracle of the exact solution in each report
    std::size_t cross_section_points = 201;

    // experiment-specific
    std::vector<double> betas{1.0, 10.0, 100.0};
    int plain_width = 30;
    std::vector<int> widths;           // ib-compare network widths; empty means {width}
    std::vector<int> ib_m{80, 160, 320};
    std::vector<std::size_t> domain_points{100, 200, 500};
    std::size_t resample_domain = 1600;

    void validate() const {
        make_example(problem);
        train.validate();
        if (width < 1 || plain_width < 1) throw ConfigError("network width must be >= 1");
        if (seeds < 1) throw ConfigError("seeds must be >= 1");
        if (cross_section_points < 1) throw ConfigError("cross_section_points must be >= 1");
        for (double b : betas)
            if (!(b > 0)) throw ConfigError("every beta must be positive");
        for (int w : widths)
            if (w < 1) throw ConfigError("every width must be >= 1");
        for (int m : ib_m)
            if (m < 3) throw ConfigError("IB grid size must be >= 3");
        for (auto n : domain_points)
            if (n < 1) throw ConfigError("points-sweep counts must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Presets and config files

inline RunConfig preset(const std::string& name) {
    RunConfig c;
    c.train.trace_stride = 100;
    auto batch = [&](std::size_t m, std::size_t mg, std::size_t mb) { c.train.batch = {m, mg, mb}; };
    if (name == "example1") {
        c.problem = "example1", c.width = 20, c.train.beta = 200, batch(200, 80, 80);
    } else if (name == "example2") {
        c.problem = "example2", c.width = 20, c.train.beta = 200, batch(1600, 160, 160);
    } else if (name == "example3") {
        c.problem = "example3", c.width = 40, c.train.beta = 200, batch(400, 80, 80);
    } else if (name == "example4") {
        c.problem = "example4", c.width = 30, c.train.beta = 100, batch(216, 216, 216);
    } else if (name == "example5") {
        c.problem = "example5", c.width = 10, c.train.beta = 100, batch(500, 1065, 1065);
    } else if (name == "table1") {
        c.problem = "example1", c.kind = ExperimentKind::ib_compare, c.widths = {10, 20, 30};
        c.train.beta = 200, batch(200, 80, 80);
    } else if (name == "table2") {
        c.problem = "example2", c.kind = ExperimentKind::ablate_phi, c.width = 20, c.plain_width = 30, c.seeds = 3;
        c.train.beta = 200, batch(1600, 160, 160);
    } else if (name == "table3") {
        c.problem = "example2", c.kind = ExperimentKind::beta_sweep, c.width = 30, c.seeds = 3;
        c.betas = {1, 10, 100}, batch(1600, 160, 160);
    } else if (name == "table7") {
        c.problem = "example5", c.kind = ExperimentKind::points_sweep, c.width = 10, c.train.beta = 100;
        c.domain_points = {100, 200, 500}, batch(500, 1065, 1065);
    } else if (name == "fig2") {
        c.problem = "example1", c.kind = ExperimentKind::fixed_vs_resample, c.width = 30, c.train.beta = 200;
        c.train.sampling = SamplingMode::fixed_midpoint, c.train.track_test_loss = true, c.train.trace_stride = 500;
        c.resample_domain = 1600, c.oracle = true, batch(1600, 160, 160);
    } else if (name == "fig3") {
        c.problem = "example1", c.kind = ExperimentKind::optimizer_compare, c.width = 20, c.seeds = 3;
        c.train.beta = 200, batch(200, 80, 80);
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"example1", "example2", "example3", "example4", "example5", "table1",
                                                "table2",   "table3",   "table7",   "fig2",     "fig3"};
    return names;
}

namespace detail {

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
    T out{};
    if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return text;
    } else {
        std::istringstream is(text);
        is >> out;
        if (is.fail() || !is.eof()) throw ConfigError("'" + key + "': cannot parse '" + text + "'");
        if constexpr (std::is_unsigned_v<T>)
            if (!text.empty() && text[0] == '-') throw ConfigError("'" + key + "': must be non-negative");
        return out;
    }
}

template <typename T>
T single(const CLI::ConfigItem& item) {
    if (item.inputs.size() != 1) throw ConfigError("'" + item.fullname() + "' expects a single value");
    return parse_scalar<T>(item.fullname(), item.inputs[0]);
}

template <typename T>
std::vector<T> list(const CLI::ConfigItem& item) {
    std::vector<T> out;
    for (const auto& s : item.inputs) out.push_back(parse_scalar<T>(item.fullname(), s));
    return out;
}

}  // namespace detail

/// Applies key/value items from a config file on top of `base`. A top-level
/// `preset` key, if present, replaces the base before other keys apply.
inline RunConfig apply_config_items(const std::vector<CLI::ConfigItem>& items, RunConfig base = {}) {
    using detail::list;
    using detail::single;
    for (const auto& it : items)
        if (it.parents.empty() && it.name == "preset") base = preset(single<std::string>(it));

    RunConfig& c = base;
    for (const auto& it : items) {
        if (it.name == "++" || it.name == "--") continue;
        const std::string section = it.parents.empty() ? "" : it.parents.front();
        const std::string& k = it.name;
        if (it.parents.size() > 1) throw ConfigError("nested section in '" + it.fullname() + "'");
        if (section.empty()) {
            if (k == "preset") continue;
            else if (k == "problem") c.problem = single<std::string>(it);
            else if (k == "kind") c.kind = experiment_from_string(single<std::string>(it));
            else if (k == "width") c.width = single<int>(it);
            else if (k == "augmented") c.augmented = single<bool>(it);
            else if (k == "activation") c.activation = activation_from_string(single<std::string>(it));
            else if (k == "init") c.init = init_from_string(single<std::string>(it));
            else if (k == "out") c.out_dir = single<std::string>(it);
            else if (k == "seeds") c.seeds = single<int>(it);
            else if (k == "error_points") c.error_points = single<std::size_t>(it);
            else if (k == "oracle") c.oracle = single<bool>(it);
            else if (k == "cross_section_points") c.cross_section_points = single<std::size_t>(it);
            else throw ConfigError("unknown key '" + k + "'");
        } else if (section == "train") {
            auto& t = c.train;
            if (k == "optimizer") t.optimizer = optimizer_from_string(single<std::string>(it));
            else if (k == "learning_rate") t.learning_rate = single<double>(it);
            else if (k == "iterations") t.iterations = single<std::size_t>(it);
            else if (k == "beta") t.beta = single<double>(it);
            else if (k == "batch") {
                const auto v = list<std::size_t>(it);
                if (v.size() != 3) throw ConfigError("'train.batch' expects [M, M_interface, M_boundary]");
                t.batch = {v[0], v[1], v[2]};
            }
            else if (k == "sampling") t.sampling = sampling_from_string(single<std::string>(it));
            else if (k == "seed") t.seed = single<std::uint64_t>(it);
            else if (k == "trace_stride") t.trace_stride = single<std::size_t>(it);
            else if (k == "precision") t.precision = precision_from_string(single<std::string>(it));
            else if (k == "adam_beta1") t.adam.beta1 = single<double>(it);
            else if (k == "adam_beta2") t.adam.beta2 = single<double>(it);
            else if (k == "adam_epsilon") t.adam.epsilon = single<double>(it);
            else if (k == "track_test_loss") t.track_test_loss = single<bool>(it);
            else if (k == "test_points") t.test_points = single<std::size_t>(it);
            else if (k == "checkpoint_stride") t.checkpoint_stride = single<std::size_t>(it);
            else throw ConfigError("unknown key 'train." + k + "'");
        } else if (section == "experiment") {
            if (k == "betas") c.betas = list<double>(it);
            else if (k == "plain_width") c.plain_width = single<int>(it);
            else if (k == "widths") c.widths = list<int>(it);
            else if (k == "ib_m") c.ib_m = list<int>(it);
            else if (k == "domain_points") c.domain_points = list<std::size_t>(it);
            else if (k == "resample_domain") c.resample_domain = single<std::size_t>(it);
            else throw ConfigError("unknown key 'experiment." + k + "'");
        } else {
            throw ConfigError("unknown section '" + section + "'");
        }
    }
    return c;
}

inline RunConfig load_run_config(const fs::path& path, RunConfig base = {}) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path.string());
    } catch (const CLI::Error& e) {
        throw ConfigError("cannot read config " + path.string() + ": " + e.what());
    }
    return apply_config_items(items, std::move(base));
}

/// Default output root: $SRITZ_OUT_ROOT if set, otherwise ./runs.
inline fs::path default_out_root() {
    const char* env = std::getenv("SRITZ_OUT_ROOT");
    return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

// ---------------------------------------------------------------------------
// Checkpoints

inline json checkpoint_json(const NetParams<double>& p) {
    json j;
    j["d"] = p.dim();
    j["N"] = p.width();
    j["activation"] = to_string(p.activation());
    j["augmented"] = p.augmented();
    const auto flat = p.flat();
    j["W1"] = std::vector<double>(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(p.b1_offset()));
    j["b1"] = std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(p.b1_offset()),
                                  flat.begin() + static_cast<std::ptrdiff_t>(p.w2_offset()));
    j["W2"] = std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(p.w2_offset()),
                                  flat.begin() + static_cast<std::ptrdiff_t>(p.b2_offset()));
    j["b2"] = p.b2();
    return j;
}

inline NetParams<double> params_from_checkpoint(const json& j) {
    try {
        const int d = j.at("d").get<int>();
        const int n = j.at("N").get<int>();
        const bool aug = j.value("augmented", true);
        const auto act = activation_from_string(j.value("activation", std::string("sigmoid")));
        const auto w1 = j.at("W1").get<std::vector<double>>();
        const auto b1 = j.at("b1").get<std::vector<double>>();
        const auto w2 = j.at("W2").get<std::vector<double>>();
        const double b2 = j.at("b2").get<double>();
        const std::size_t in = static_cast<std::size_t>(d + (aug ? 1 : 0));
        if (w1.size() != in * n || b1.size() != static_cast<std::size_t>(n) || w2.size() != static_cast<std::size_t>(n))
            throw ShapeError("checkpoint arrays do not match d and N");
        std::vector<double> flat;
        flat.reserve(NetParams<double>::count(d, n, aug));
        flat.insert(flat.end(), w1.begin(), w1.end());
        flat.insert(flat.end(), b1.begin(), b1.end());
        flat.insert(flat.end(), w2.begin(), w2.end());
        flat.push_back(b2);
        if (flat.size() != NetParams<double>::count(d, n, aug)) throw ShapeError("checkpoint parameter count mismatch");
        return NetParams<double>::unflatten(d, n, aug, act, flat);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

inline void save_checkpoint(const fs::path& path, const NetParams<double>& p) { write_json(path, checkpoint_json(p)); }
inline NetParams<double> load_checkpoint(const fs::path& path) { return params_from_checkpoint(read_json(path)); }

// ---------------------------------------------------------------------------
// Reports

struct ErrorReport {
    std::string label;
    std::string problem;
    int d = 0;
    int N = 0;
    std::size_t N_p = 0;
    bool augmented = true;
    BatchSizes batch;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string optimizer = "adam";
    std::string sampling = "resample";
    std::string precision = "double";
    std::size_t iterations = 0;
    double rel_linf = 0.0;
    double rel_l2 = 0.0;
    double seconds = 0.0;
    double final_loss = 0.0;     // training loss at the last iteration
    double trailing_loss = 0.0;  // mean training loss over the last 1000 iterations
    bool diverged = false;
    std::optional<double> test_loss;      // fresh-point loss at the last iteration
    std::optional<double> oracle_energy;  // dense energy of the exact solution

    bool operator==(const ErrorReport&) const = default;
};

namespace detail {

// JSON has no inf/nan; store them as strings.
inline json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double number(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw ConfigError("bad number '" + s + "'");
    }
    return j.get<double>();
}

}  // namespace detail

inline json to_json(const ErrorReport& r) {
    json j;
    j["label"] = r.label;
    j["problem"] = r.problem;
    j["d"] = r.d;
    j["N"] = r.N;
    j["N_p"] = r.N_p;
    j["augmented"] = r.augmented;
    j["M"] = r.batch.domain;
    j["M_interface"] = r.batch.interface;
    j["M_boundary"] = r.batch.boundary;
    j["beta"] = r.beta;
    j["seed"] = r.seed;
    j["optimizer"] = r.optimizer;
    j["sampling"] = r.sampling;
    j["precision"] = r.precision;
    j["iterations"] = r.iterations;
    j["rel_Linf"] = detail::number(r.rel_linf);
    j["rel_L2"] = detail::number(r.rel_l2);
    j["seconds"] = r.seconds;
    j["final_loss"] = detail::number(r.final_loss);
    j["trailing_loss"] = detail::number(r.trailing_loss);
    j["diverged"] = r.diverged;
    j["test_loss"] = r.test_loss ? detail::number(*r.test_loss) : json(nullptr);
    j["oracle_energy"] = r.oracle_energy ? detail::number(*r.oracle_energy) : json(nullptr);
    return j;
}

/// Parses a report and cross-checks N_p against (d, N, augmented).
inline ErrorReport report_from_json(const json& j) {
    try {
        ErrorReport r;
        r.label = j.at("label").get<std::string>();
        r.problem = j.at("problem").get<std::string>();
        r.d = j.at("d").get<int>();
        r.N = j.at("N").get<int>();
        r.N_p = j.at("N_p").get<std::size_t>();
        r.augmented = j.at("augmented").get<bool>();
        r.batch = {j.at("M").get<std::size_t>(), j.at("M_interface").get<std::size_t>(),
                   j.at("M_boundary").get<std::size_t>()};
        r.beta = j.at("beta").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.optimizer = j.at("optimizer").get<std::string>();
        r.sampling = j.at("sampling").get<std::string>();
        r.precision = j.at("precision").get<std::string>();
        r.iterations = j.at("iterations").get<std::size_t>();
        r.rel_linf = detail::number(j.at("rel_Linf"));
        r.rel_l2 = detail::number(j.at("rel_L2"));
        r.seconds = j.at("seconds").get<double>();
        r.final_loss = detail::number(j.at("final_loss"));
        r.trailing_loss = detail::number(j.at("trailing_loss"));
        r.diverged = j.at("diverged").get<bool>();
        if (!j.at("test_loss").is_null()) r.test_loss = detail::number(j.at("test_loss"));
        if (!j.at("oracle_energy").is_null()) r.oracle_energy = detail::number(j.at("oracle_energy"));
        if (r.N_p != NetParams<double>::count(r.d, r.N, r.augmented))
            throw ShapeError("report N_p = " + std::to_string(r.N_p) + " does not match d = " + std::to_string(r.d) +
                             ", N = " + std::to_string(r.N));
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

struct IbReport {
    int m = 0;
    int m_gamma = 0;
    std::size_t N_deg = 0;
    double rel_linf = 0.0;
    int iterations = 0;
    double seconds = 0.0;
};

inline json to_json(const IbReport& r) {
    return json{{"m", r.m},          {"m_gamma", r.m_gamma},       {"N_deg", r.N_deg},
                {"rel_Linf", r.rel_linf}, {"cg_iterations", r.iterations}, {"seconds", r.seconds}};
}

/// IB solve on an m x m grid with m_gamma markers (m_gamma = m when 0).
inline std::pair<IbReport, ib::Solution> run_ib(const ProblemSpec& problem, int m, int m_gamma = 0) {
    if (m_gamma == 0) m_gamma = m;
    const auto t0 = std::chrono::steady_clock::now();
    auto sol = ib::solve(problem, m, m_gamma);
    IbReport r;
    r.m = m;
    r.m_gamma = m_gamma;
    r.N_deg = static_cast<std::size_t>(m) * m;
    r.rel_linf = ib::grid_errors(sol, problem);
    r.iterations = sol.iterations;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {r, std::move(sol)};
}

inline void write_grid_csv(const fs::path& path, const ib::Solution& sol, const ProblemSpec& problem) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << std::setprecision(17) << "x,y,u_ib,u_exact\n";
    double x[2];
    for (int j = 0; j < sol.grid.m; ++j)
        for (int i = 0; i < sol.grid.m; ++i) {
            x[0] = sol.grid.coord(i), x[1] = sol.grid.coord(j);
            os << x[0] << ',' << x[1] << ',' << sol.u[sol.grid.index(i, j)] << ',' << problem.u(x) << '\n';
        }
}

// ---------------------------------------------------------------------------
// Traces and cross sections

inline void write_trace_csv(const fs::path& path, const LossTrace& trace) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << std::setprecision(17) << "iteration,train_loss,test_loss,domain_term,interface_term,boundary_term\n";
    for (const auto& row : trace.rows) {
        os << row.iteration << ',' << row.train.total() << ',';
        if (row.has_test) os << row.test.total();
        os << ',' << row.train.domain << ',' << row.train.interface << ',' << row.train.boundary << '\n';
    }
}

struct CrossSectionRow {
    double coordinate = 0.0;
    double u_s = 0.0;
    double u_exact = 0.0;
};

/// Samples `approx` and the exact solution on the line through the origin along
/// `axis` ('x': the line y = 0, 'y': the line x = 0), clipped to the domain.
/// count = 1 gives the origin only.
inline std::vector<CrossSectionRow> emit_cross_sections(const std::function<double(std::span<const double>)>& approx,
                                                        const ProblemSpec& problem, char axis, std::size_t count) {
    if (problem.dim != 2) throw UnsupportedError("cross sections need a 2D problem");
    if (axis != 'x' && axis != 'y') throw ConfigError("cross-section axis must be 'x' or 'y'");
    if (count < 1) throw ConfigError("cross section needs at least one point");
    const int k = axis == 'x' ? 0 : 1;
    double e[2] = {0, 0};
    e[k] = 1.0;
    const double hi = problem.domain.ray_exit(e);
    e[k] = -1.0;
    const double lo = -problem.domain.ray_exit(e);
    std::vector<CrossSectionRow> rows;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        double x[2] = {0, 0};
        x[k] = t;
        rows.push_back({t, approx(x), problem.u(x)});
    }
    return rows;
}

inline std::vector<CrossSectionRow> emit_cross_sections(const NetParams<double>& params, const ProblemSpec& problem,
                                                        char axis, std::size_t count) {
    if (params.dim() != problem.dim) throw ShapeError("network dimension does not match the problem");
    return emit_cross_sections([&](std::span<const double> x) { return forward(params, x, problem.interface.phi); },
                               problem, axis, count);
}

inline void write_cross_sections_csv(const fs::path& path, const NetParams<double>& params, const ProblemSpec& problem,
                                     std::size_t count) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << std::setprecision(17) << "axis,coordinate,u_s,u_exact\n";
    for (char axis : {'x', 'y'})
        for (const auto& r : emit_cross_sections(params, problem, axis, count))
            os << axis << ',' << r.coordinate << ',' << r.u_s << ',' << r.u_exact << '\n';
}

// ---------------------------------------------------------------------------
// Runs

struct RunSpec {
    std::string label;
    int width = 20;
    bool augmented = true;
    TrainConfig train;
};

inline NetParams<double> initial_params(const ProblemSpec& problem, int width, bool augmented, Activation act,
                                        InitScheme init, std::uint64_t seed) {
    NetParams<double> p(problem.dim, width, augmented, act);
    Rng rng(seed, Stream::init);
    initialize(p, rng, init);
    return p;
}

/// Energy oracle of the exact solution at the given beta.
inline OracleResult exact_energy(const ProblemSpec& problem, double beta) {
    return energy_oracle(problem, exact_field(problem), beta);
}

/// Trains one network and writes report.json, trace.csv, model.json (and
/// cross_section.csv in 2D) under dir. A diverging run is reported with
/// infinite loss and errors rather than aborting the experiment.
inline ErrorReport run_training(const ProblemSpec& problem, const RunConfig& rc, const RunSpec& spec, const fs::path& dir,
                                std::optional<double> oracle_value = std::nullopt) {
    fs::create_directories(dir);
    ErrorReport r;
    r.label = spec.label;
    r.problem = problem.name;
    r.d = problem.dim;
    r.N = spec.width;
    r.N_p = NetParams<double>::count(problem.dim, spec.width, spec.augmented);
    r.augmented = spec.augmented;
    r.batch = spec.train.batch;
    r.beta = spec.train.beta;
    r.seed = spec.train.seed;
    r.optimizer = to_string(spec.train.optimizer);
    r.sampling = to_string(spec.train.sampling);
    r.precision = to_string(spec.train.precision);
    r.iterations = spec.train.iterations;
    r.oracle_energy = oracle_value;

    const auto init = initial_params(problem, spec.width, spec.augmented, rc.activation, rc.init, spec.train.seed);
    const auto ckpt_dir = dir / "checkpoints";
    CheckpointFn ckpt;
    if (spec.train.checkpoint_stride > 0) {
        fs::create_directories(ckpt_dir);
        ckpt = [&](std::size_t it, const NetParams<double>& p) {
            save_checkpoint(ckpt_dir / ("model_" + std::to_string(it) + ".json"), p);
        };
    }
    try {
        const auto res = train(problem, init, spec.train, ckpt);
        r.seconds = res.seconds;
        r.final_loss = res.trace.history.back();
        r.trailing_loss = res.trace.trailing_mean(1000);
        if (!res.trace.rows.empty() && res.trace.rows.back().has_test) r.test_loss = res.trace.rows.back().test.total();
        const std::size_t n_test = rc.error_points ? rc.error_points : 100 * spec.train.batch.domain;
        Rng erng(spec.train.seed, Stream::eval);
        const auto err = evaluate_errors(problem, res.params, n_test, erng);
        r.rel_linf = err.rel_linf;
        r.rel_l2 = err.rel_l2;
        save_checkpoint(dir / "model.json", res.params);
        write_trace_csv(dir / "trace.csv", res.trace);
        if (problem.dim == 2) write_cross_sections_csv(dir / "cross_section.csv", res.params, problem, rc.cross_section_points);
    } catch (const TrainingError& e) {
        const double inf = std::numeric_limits<double>::infinity();
        r.diverged = true;
        r.final_loss = r.trailing_loss = r.rel_linf = r.rel_l2 = inf;
        std::ofstream(dir / "error.txt") << e.what() << '\n';
    }
    write_json(dir / "report.json", to_json(r));
    return r;
}

struct ExperimentResult {
    std::string kind;
    std::vector<ErrorReport> reports;
    std::vector<IbReport> ib;
    std::optional<OracleResult> oracle;
};

inline json to_json(const ExperimentResult& e) {
    json j;
    j["kind"] = e.kind;
    j["reports"] = json::array();
    for (const auto& r : e.reports) j["reports"].push_back(to_json(r));
    j["ib"] = json::array();
    for (const auto& r : e.ib) j["ib"].push_back(to_json(r));
    if (e.oracle)
        j["oracle"] = {{"energy", e.oracle->energy},         {"previous", e.oracle->previous},
                       {"resolution", e.oracle->resolution}, {"converged", e.oracle->converged}};
    return j;
}

/// Runs the configured experiment sequentially; each run writes into its own
/// subdirectory of rc.out_dir and the collected reports go to summary.json.
inline ExperimentResult run_experiment(const RunConfig& rc) {
    rc.validate();
    const auto problem = make_example(rc.problem);
    fs::create_directories(rc.out_dir);
    ExperimentResult out;
    out.kind = to_string(rc.kind);

    std::optional<double> oracle_value;
    if (rc.oracle || rc.kind == ExperimentKind::fixed_vs_resample) {
        out.oracle = exact_energy(problem, rc.train.beta);
        oracle_value = out.oracle->energy;
    }

    auto seeded = [&](const std::string& label, int width, bool aug, TrainConfig t) {
        for (int s = 0; s < rc.seeds; ++s) {
            t.seed = rc.train.seed + static_cast<std::uint64_t>(s);
            const std::string name = rc.seeds > 1 ? label + "_seed" + std::to_string(t.seed) : label;
            out.reports.push_back(run_training(problem, rc, {name, width, aug, t}, rc.out_dir / name, oracle_value));
        }
    };

    switch (rc.kind) {
        case ExperimentKind::train:
            seeded("run", rc.width, rc.augmented, rc.train);
            break;
        case ExperimentKind::ablate_phi:
            seeded("augmented_N" + std::to_string(rc.width), rc.width, true, rc.train);
            seeded("plain_N" + std::to_string(rc.plain_width), rc.plain_width, false, rc.train);
            break;
        case ExperimentKind::beta_sweep:
            for (double b : rc.betas) {
                TrainConfig t = rc.train;
                t.beta = b;
                std::ostringstream name;
                name << "beta_" << b;
                seeded(name.str(), rc.width, rc.augmented, t);
            }
            break;
        case ExperimentKind::optimizer_compare:
            for (auto opt : {Optimizer::adam, Optimizer::sgd}) {
                TrainConfig t = rc.train;
                t.optimizer = opt;
                seeded(to_string(opt), rc.width, rc.augmented, t);
            }
            break;
        case ExperimentKind::fixed_vs_resample: {
            TrainConfig fixed = rc.train;
            fixed.sampling = SamplingMode::fixed_midpoint;
            fixed.track_test_loss = true;
            seeded("fixed_midpoint", rc.width, rc.augmented, fixed);
            TrainConfig fresh = fixed;
            fresh.sampling = SamplingMode::resample;
            fresh.batch.domain = rc.resample_domain;
            seeded("resample", rc.width, rc.augmented, fresh);
            break;
        }
        case ExperimentKind::ib_compare: {
            for (int m : rc.ib_m) {
                auto [rep, sol] = run_ib(problem, m);
                const auto dir = rc.out_dir / ("ib_m" + std::to_string(m));
                fs::create_directories(dir);
                write_json(dir / "report.json", to_json(rep));
                out.ib.push_back(rep);
            }
            const auto widths = rc.widths.empty() ? std::vector<int>{rc.width} : rc.widths;
            for (int w : widths) seeded("ritz_N" + std::to_string(w), w, rc.augmented, rc.train);
            break;
        }
        case ExperimentKind::points_sweep:
            for (auto m : rc.domain_points) {
                TrainConfig t = rc.train;
                const auto* ball = std::get_if<Ball>(&problem.domain.shape);
                const std::size_t surf = ball ? ball_surface_count(m, problem.dim) : 0;
                t.batch = {m, ball ? surf : t.batch.interface, ball ? surf : t.batch.boundary};
                seeded("M" + std::to_string(m), rc.width, rc.augmented, t);
            }
            break;
    }
    write_json(rc.out_dir / "summary.json", to_json(out));
    return out;
}

}  // namespace sritz
