// stripmc CLI: run experiments from JSON configs or built-in presets.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "stripmc/stripmc.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& preset,
            std::optional<std::int64_t> particles,
            std::optional<std::uint64_t> seed, std::optional<int> workers,
            std::optional<std::string> output_dir) {
    stripmc::ExperimentConfig config;
    if (!preset.empty()) {
        config = stripmc::make_preset(preset);
    } else {
        config = stripmc::load_experiment(config_path);
    }
    if (particles) config.n_particles = *particles;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (output_dir) config.output_dir = *output_dir;

    const stripmc::RunResult result = stripmc::run_experiment(config);
    std::cout << result.summary;
    std::cout << "wrote:\n";
    for (const auto& f : result.files) std::cout << "  " << f << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-driven Monte Carlo for particle transport in a strip"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset;
    std::int64_t particles = -1;
    std::uint64_t seed = 0;
    int workers = -1;
    std::string output_dir;

    auto* run = app.add_subcommand("run", "run an experiment");
    auto* config_opt =
        run->add_option("config", config_path, "JSON config file")
            ->check(CLI::ExistingFile);
    auto* preset_opt =
        run->add_option("--preset", preset, "built-in experiment name");
    config_opt->excludes(preset_opt);
    auto* particles_opt = run->add_option(
        "--particles", particles, "override n_particles");
    auto* seed_opt = run->add_option("--seed", seed, "override RNG seed");
    auto* workers_opt =
        run->add_option("--workers", workers, "override worker thread count");
    auto* output_opt =
        run->add_option("--output", output_dir, "override output directory");

    auto* presets = app.add_subcommand("presets", "list built-in experiments");

    std::string dump_name;
    auto* dump = app.add_subcommand("dump-preset",
                                    "print a built-in experiment as JSON");
    dump->add_option("name", dump_name, "preset name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) {
            for (const auto& name : stripmc::preset_names())
                std::cout << name << "\n";
            return 0;
        }
        if (dump->parsed()) {
            const auto config = stripmc::make_preset(dump_name);
            nlohmann::json j = stripmc::config_to_json(config);
            j["workers"] = config.workers;
            j["output_dir"] = config.output_dir;
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (config_path.empty() && preset.empty()) {
            std::cerr << "error: run needs a config file or --preset\n";
            return 1;
        }
        return cmd_run(
            config_path, preset,
            particles_opt->count() ? std::optional(particles) : std::nullopt,
            seed_opt->count() ? std::optional(seed) : std::nullopt,
            workers_opt->count() ? std::optional(workers) : std::nullopt,
            output_opt->count() ? std::optional(output_dir) : std::nullopt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
