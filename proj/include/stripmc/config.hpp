#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stripmc/analysis.hpp"
#include "stripmc/density.hpp"
#include "stripmc/geometry.hpp"
#include "stripmc/grid.hpp"
#include "stripmc/laplace.hpp"
#include "stripmc/scattering.hpp"

namespace stripmc {

enum class RunMode {
    stationary,       ///< trace particles, histogram density, compare to solver
    residence_sweep,  ///< residence-time report over an obstacle family
    oracle,           ///< solver field + flux profile only, no particles
    msd_check,        ///< free-space mean-square displacement vs. 4 D t
};

inline const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::stationary: return "stationary";
        case RunMode::residence_sweep: return "residence-sweep";
        case RunMode::oracle: return "oracle";
        case RunMode::msd_check: return "msd-check";
    }
    return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
    for (const auto m : {RunMode::stationary, RunMode::residence_sweep,
                         RunMode::oracle, RunMode::msd_check})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown mode: \"" + s +
                                "\" (expected stationary, residence-sweep, "
                                "oracle or msd-check)");
}

/// Sampling plan for msd-check mode. The horizon is expressed in units of
/// the mean flight time so one config works across kernels.
struct MsdOptions {
    int n_times{32};
    double horizon_over_tm{100.0};

    bool operator==(const MsdOptions&) const = default;
};

struct ExperimentConfig {
    RunMode mode{RunMode::stationary};
    DomainConfig domain;
    KernelParams kernel;
    int grid_nx{200};
    int grid_ny{50};
    std::int64_t n_particles{2'000'000};
    std::uint64_t seed{12345};
    int workers{1};
    std::string output_dir{"out"};
    std::optional<SweepSpec> sweep;  ///< required iff mode == residence_sweep
    SolverSettings solver;
    NormalizeOptions normalization;
    MsdOptions msd;

    GridSpec grid() const {
        return GridSpec{grid_nx, grid_ny, domain.strip.length_x,
                        domain.strip.length_y};
    }

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& where,
                                      const std::string& what) {
    throw std::runtime_error("config." + where + ": " + what);
}

/// Rejects unknown keys so typos fail loudly instead of silently using a
/// default.
inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(where, "expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) known = true;
        if (!known) config_error(where + "." + item.key(), "unknown field");
    }
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(where, "wrong type (got " + std::string(j.type_name()) + ")");
    }
}

template <typename T>
T require(const nlohmann::json& j, const std::string& where, const char* key) {
    if (!j.contains(key))
        config_error(where + "." + key, "missing required field");
    return get_as<T>(j.at(key), where + "." + key);
}

template <typename T>
T value_or(const nlohmann::json& j, const std::string& where, const char* key,
           T fallback) {
    if (!j.contains(key)) return fallback;
    return get_as<T>(j.at(key), where + "." + key);
}

inline Vec2 parse_vec2(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2)
        config_error(where, "expected [x, y]");
    return {get_as<double>(j.at(0), where + "[0]"),
            get_as<double>(j.at(1), where + "[1]")};
}

inline RectObstacle parse_rect(const nlohmann::json& j,
                               const std::string& where) {
    check_keys(j, where, {"type", "center", "width", "height"});
    if (!j.contains("center"))
        config_error(where + ".center", "missing required field");
    RectObstacle r;
    r.center = parse_vec2(j.at("center"), where + ".center");
    r.half_width = 0.5 * require<double>(j, where, "width");
    r.half_height = 0.5 * require<double>(j, where, "height");
    return r;
}

inline Obstacle parse_obstacle(const nlohmann::json& j,
                               const std::string& where) {
    const auto type = require<std::string>(j, where, "type");
    if (type == "rect") return parse_rect(j, where);
    if (type == "disk") {
        check_keys(j, where, {"type", "center", "radius"});
        DiskObstacle d;
        if (!j.contains("center"))
            config_error(where + ".center", "missing required field");
        d.center = parse_vec2(j.at("center"), where + ".center");
        d.radius = require<double>(j, where, "radius");
        return d;
    }
    config_error(where + ".type",
                 "unknown obstacle type \"" + type + "\" (rect or disk)");
}

inline DomainConfig parse_domain(const nlohmann::json& j,
                                 const std::string& where) {
    check_keys(j, where, {"strip", "rho_left", "rho_right", "obstacles"});
    DomainConfig d;
    if (j.contains("strip")) {
        const auto& s = j.at("strip");
        check_keys(s, where + ".strip", {"length_x", "length_y"});
        d.strip.length_x = value_or(s, where + ".strip", "length_x", 4.0);
        d.strip.length_y = value_or(s, where + ".strip", "length_y", 1.0);
    }
    d.rho_left = value_or(j, where, "rho_left", 1.0);
    d.rho_right = value_or(j, where, "rho_right", 0.5);
    if (j.contains("obstacles")) {
        const auto& arr = j.at("obstacles");
        if (!arr.is_array()) config_error(where + ".obstacles", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            d.obstacles.push_back(parse_obstacle(
                arr.at(i), where + ".obstacles[" + std::to_string(i) + "]"));
    }
    return d;
}

inline nlohmann::json obstacle_to_json(const Obstacle& ob) {
    nlohmann::json j;
    if (const auto* r = std::get_if<RectObstacle>(&ob)) {
        j["type"] = "rect";
        j["center"] = {r->center.x, r->center.y};
        j["width"] = 2.0 * r->half_width;
        j["height"] = 2.0 * r->half_height;
    } else {
        const auto& d = std::get<DiskObstacle>(ob);
        j["type"] = "disk";
        j["center"] = {d.center.x, d.center.y};
        j["radius"] = d.radius;
    }
    return j;
}

}  // namespace detail

/// Parses a full experiment. Error messages name the offending section as
/// config.<path>.
inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::config_error;
    using detail::require;
    using detail::value_or;

    check_keys(j, "", {"mode", "domain", "kernel", "grid", "n_particles",
                       "seed", "workers", "output_dir", "sweep", "solver",
                       "normalization", "msd"});
    ExperimentConfig c;
    if (j.contains("mode")) {
        try {
            c.mode = run_mode_from_string(require<std::string>(j, "", "mode"));
        } catch (const std::invalid_argument& e) {
            config_error("mode", e.what());
        }
    }
    if (j.contains("domain")) c.domain = detail::parse_domain(j.at("domain"), "domain");
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        check_keys(k, "kernel", {"mean_flight_time"});
        c.kernel.mean_flight_time =
            value_or(k, "kernel", "mean_flight_time", 1.0);
        if (!(c.kernel.mean_flight_time > 0.0))
            config_error("kernel.mean_flight_time", "must be positive");
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "grid", {"nx", "ny"});
        c.grid_nx = require<int>(g, "grid", "nx");
        c.grid_ny = require<int>(g, "grid", "ny");
        if (c.grid_nx < 1 || c.grid_ny < 1)
            config_error("grid", "nx and ny must be at least 1");
    }
    c.n_particles = value_or<std::int64_t>(j, "", "n_particles", c.n_particles);
    if (c.n_particles < 1) config_error("n_particles", "must be at least 1");
    c.seed = value_or<std::uint64_t>(j, "", "seed", c.seed);
    c.workers = value_or(j, "", "workers", c.workers);
    if (c.workers < 1) config_error("workers", "must be at least 1");
    c.output_dir = value_or<std::string>(j, "", "output_dir", c.output_dir);
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        check_keys(s, "solver", {"tolerance", "max_iterations", "relaxation"});
        c.solver.tolerance = value_or(s, "solver", "tolerance", c.solver.tolerance);
        c.solver.max_iterations = value_or<std::int64_t>(
            s, "solver", "max_iterations", c.solver.max_iterations);
        c.solver.relaxation =
            value_or(s, "solver", "relaxation", c.solver.relaxation);
    }
    if (j.contains("normalization")) {
        const auto& n = j.at("normalization");
        check_keys(n, "normalization", {"single_cell"});
        c.normalization.single_cell =
            value_or(n, "normalization", "single_cell", false);
    }
    if (j.contains("msd")) {
        const auto& m = j.at("msd");
        check_keys(m, "msd", {"n_times", "horizon_over_tm"});
        c.msd.n_times = value_or(m, "msd", "n_times", c.msd.n_times);
        c.msd.horizon_over_tm =
            value_or(m, "msd", "horizon_over_tm", c.msd.horizon_over_tm);
        if (c.msd.n_times < 1) config_error("msd.n_times", "must be at least 1");
        if (!(c.msd.horizon_over_tm > 0.0))
            config_error("msd.horizon_over_tm", "must be positive");
    }
    if (j.contains("sweep")) {
        if (c.mode != RunMode::residence_sweep)
            config_error("sweep", "only valid with mode residence-sweep");
        const auto& s = j.at("sweep");
        check_keys(s, "sweep", {"parameter", "values", "obstacle"});
        SweepSpec spec;
        spec.base_config = c.domain;
        try {
            spec.varied_parameter = sweep_parameter_from_string(
                require<std::string>(s, "sweep", "parameter"));
        } catch (const std::invalid_argument& e) {
            config_error("sweep.parameter", e.what());
        }
        spec.values = require<std::vector<double>>(s, "sweep", "values");
        if (spec.values.empty())
            config_error("sweep.values", "must be non-empty");
        if (!s.contains("obstacle"))
            config_error("sweep.obstacle", "missing required field");
        spec.obstacle_template =
            detail::parse_rect(s.at("obstacle"), "sweep.obstacle");
        c.sweep = std::move(spec);
    } else if (c.mode == RunMode::residence_sweep) {
        config_error("sweep", "missing required field for mode residence-sweep");
    }
    return c;
}

inline ExperimentConfig parse_experiment(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_experiment(j);
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str());
}

/// Resolved-config echo used in output headers and `dump-preset`. Workers
/// and output_dir are deliberately excluded: neither may influence results,
/// and output files must be byte-identical across both.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["mode"] = to_string(c.mode);
    j["domain"]["strip"]["length_x"] = c.domain.strip.length_x;
    j["domain"]["strip"]["length_y"] = c.domain.strip.length_y;
    j["domain"]["rho_left"] = c.domain.rho_left;
    j["domain"]["rho_right"] = c.domain.rho_right;
    j["domain"]["obstacles"] = nlohmann::json::array();
    for (const auto& ob : c.domain.obstacles)
        j["domain"]["obstacles"].push_back(detail::obstacle_to_json(ob));
    j["kernel"]["mean_flight_time"] = c.kernel.mean_flight_time;
    j["grid"]["nx"] = c.grid_nx;
    j["grid"]["ny"] = c.grid_ny;
    j["n_particles"] = c.n_particles;
    j["seed"] = c.seed;
    j["solver"]["tolerance"] = c.solver.tolerance;
    j["solver"]["max_iterations"] = c.solver.max_iterations;
    j["solver"]["relaxation"] = c.solver.relaxation;
    j["normalization"]["single_cell"] = c.normalization.single_cell;
    j["msd"]["n_times"] = c.msd.n_times;
    j["msd"]["horizon_over_tm"] = c.msd.horizon_over_tm;
    if (c.sweep) {
        j["sweep"]["parameter"] = to_string(c.sweep->varied_parameter);
        j["sweep"]["values"] = c.sweep->values;
        j["sweep"]["obstacle"] =
            detail::obstacle_to_json(c.sweep->obstacle_template);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Presets: the experiments behind the shipped figures, expressed as full
// configs so `--preset` and the JSON files under presets/ stay in sync.

namespace detail {

inline RectObstacle centered_rect(double cx, double cy, double w, double h) {
    return RectObstacle{{cx, cy}, 0.5 * w, 0.5 * h};
}

inline ExperimentConfig preset_base(RunMode mode, double mean_flight_time,
                                    const std::string& name) {
    ExperimentConfig c;
    c.mode = mode;
    c.kernel.mean_flight_time = mean_flight_time;
    c.output_dir = "out/" + name;
    return c;
}

inline ExperimentConfig sweep_preset(const std::string& name,
                                     SweepParameter parameter,
                                     std::vector<double> values,
                                     RectObstacle obstacle_template) {
    // Residence sweeps follow the crossing-time figures: t_m = 2e-2.
    ExperimentConfig c = preset_base(RunMode::residence_sweep, 2e-2, name);
    SweepSpec s;
    s.base_config = c.domain;
    s.varied_parameter = parameter;
    s.values = std::move(values);
    s.obstacle_template = obstacle_template;
    c.sweep = std::move(s);
    return c;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
    return {
        "fig-empty",
        "fig-square-obstacle",
        "fig-thin-obstacle",
        "fig-two-obstacles",
        "sweep-height-thin",
        "sweep-height-wide",
        "sweep-width",
        "sweep-square-side",
        "sweep-center-square",
        "sweep-center-thin",
    };
}

/// Built-in experiment definitions. Stationary presets use t_m = 1e-2 (the
/// finest kernel the density figures are drawn at); sweep presets use
/// t_m = 2e-2. Throws std::invalid_argument for unknown names, listing the
/// valid ones.
inline ExperimentConfig make_preset(const std::string& name) {
    using detail::centered_rect;
    using detail::preset_base;
    using detail::sweep_preset;

    if (name == "fig-empty") {
        return preset_base(RunMode::stationary, 1e-2, name);
    }
    if (name == "fig-square-obstacle") {
        ExperimentConfig c = preset_base(RunMode::stationary, 1e-2, name);
        c.domain.obstacles.push_back(centered_rect(2.0, 0.5, 0.8, 0.8));
        return c;
    }
    if (name == "fig-thin-obstacle") {
        ExperimentConfig c = preset_base(RunMode::stationary, 1e-2, name);
        c.domain.obstacles.push_back(centered_rect(2.0, 0.5, 0.04, 0.8));
        return c;
    }
    if (name == "fig-two-obstacles") {
        ExperimentConfig c = preset_base(RunMode::stationary, 1e-2, name);
        c.domain.obstacles.push_back(centered_rect(1.3, 0.5, 0.6, 0.6));
        c.domain.obstacles.push_back(centered_rect(2.7, 0.5, 0.6, 0.6));
        return c;
    }
    if (name == "sweep-height-thin") {
        return sweep_preset(name, SweepParameter::obstacle_height,
                            {0.2, 0.35, 0.5, 0.65, 0.8},
                            centered_rect(2.0, 0.5, 0.04, 0.5));
    }
    if (name == "sweep-height-wide") {
        return sweep_preset(name, SweepParameter::obstacle_height,
                            {0.3, 0.5, 0.65, 0.9},
                            centered_rect(2.0, 0.5, 0.8, 0.5));
    }
    if (name == "sweep-width") {
        return sweep_preset(name, SweepParameter::obstacle_width,
                            {0.04, 0.4, 0.8, 1.2, 2.0},
                            centered_rect(2.0, 0.5, 0.5, 0.8));
    }
    if (name == "sweep-square-side") {
        return sweep_preset(name, SweepParameter::obstacle_side,
                            {0.2, 0.4, 0.6, 0.8},
                            centered_rect(2.0, 0.5, 0.5, 0.5));
    }
    if (name == "sweep-center-square") {
        return sweep_preset(name, SweepParameter::obstacle_center_x,
                            {0.8, 1.6, 2.0, 2.4, 3.2},
                            centered_rect(2.0, 0.5, 0.8, 0.8));
    }
    if (name == "sweep-center-thin") {
        return sweep_preset(name, SweepParameter::obstacle_center_x,
                            {0.8, 1.4, 2.0, 2.6, 3.2},
                            centered_rect(2.0, 0.5, 0.04, 0.8));
    }
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    throw std::invalid_argument("unknown preset \"" + name + "\"; available:" +
                                known);
}

}  // namespace stripmc
