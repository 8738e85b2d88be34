#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stripmc/config.hpp"

namespace stripmc {

struct RunResult {
    std::vector<std::string> files;  ///< artifact paths, in creation order
    std::string summary;             ///< same text as summary.txt (sans header)
};

namespace detail {

/// Collects output paths so a failed run can remove its partial artifacts.
class ArtifactSink {
public:
    explicit ArtifactSink(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw std::runtime_error("cannot create output directory " + dir +
                                     ": " + ec.message());
    }

    std::string path(const std::string& name) {
        const std::string p = (std::filesystem::path(dir_) / name).string();
        written_.push_back(p);
        return p;
    }

    void write_text(const std::string& name, const std::string& text) {
        const std::string p = path(name);
        std::ofstream os(p);
        if (!os) throw std::runtime_error("cannot open " + p + " for writing");
        os << text;
        if (!os) throw std::runtime_error("write failed: " + p);
    }

    void discard_all() {
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::string dir_;
    std::vector<std::string> written_;
};

inline std::vector<std::string> artifact_comments(const ExperimentConfig& c,
                                                  const std::string& what) {
    // No timestamps or host details: reruns of one config must be
    // byte-identical, including across --workers.
    return {what, "config: " + config_to_json(c).dump()};
}

inline std::string tally_line(const BatchResult& batch) {
    std::ostringstream os;
    os << "exits (entry->exit): LL " << batch.tally(Side::left, Side::left).count
       << ", LR " << batch.tally(Side::left, Side::right).count << ", RL "
       << batch.tally(Side::right, Side::left).count << ", RR "
       << batch.tally(Side::right, Side::right).count << ", aborted "
       << batch.aborted;
    return os.str();
}

inline void run_stationary(const ExperimentConfig& c, ArtifactSink& sink,
                           std::ostringstream& summary) {
    const GridSpec grid = c.grid();
    const ScalarField reference = solve_laplace(c.domain, grid, c.solver);
    const BatchResult batch =
        run_batch(c.domain, c.kernel, c.n_particles, grid, c.seed,
                  BatchOptions{c.workers, {}});
    const ScalarField density =
        normalize(to_sojourn_grid(batch, c.domain), c.domain, c.normalization);
    const ScalarField error = relative_error(density, reference);

    write_field_csv(sink.path("density.csv"), density,
                    artifact_comments(c, "normalized stationary density"));
    write_field_csv(sink.path("oracle.csv"), reference,
                    artifact_comments(c, "mixed-boundary Laplace solution"));
    write_field_csv(sink.path("relative_error.csv"), error,
                    artifact_comments(c, "relative error |mc - ref| / ref"));

    const auto obstacle_mask = make_obstacle_mask(grid, c.domain);
    const auto near_mask = dilate_mask(grid, obstacle_mask);
    const ErrorStats all = error_stats(error);
    const ErrorStats away = error_stats(error, &near_mask);
    const CrosserStats cross = crosser_stats(batch);

    summary << "stationary density vs. Laplace reference\n";
    summary << "  particles: " << batch.n_particles << " (t_m "
            << c.kernel.mean_flight_time << ", grid " << grid.nx << "x"
            << grid.ny << ", seed " << c.seed << ")\n";
    summary << "  " << tally_line(batch) << "\n";
    summary << "  crossing fraction (left->right per left injection): "
            << crossing_fraction(batch) << "\n";
    if (cross.count > 0)
        summary << "  crosser residence: " << cross.mean_residence << " +- "
                << cross.standard_error << " over " << cross.count
                << " crossers (t_L " << cross.mean_region_times[0] << ", t_C "
                << cross.mean_region_times[1] << ", t_R "
                << cross.mean_region_times[2] << ")\n";
    summary << "  relative error, all unmasked cells: max " << all.max_error
            << ", mean " << all.mean_error << " (" << all.cells << " cells)\n";
    summary << "  relative error, >1 cell from obstacles: max "
            << away.max_error << ", mean " << away.mean_error << " ("
            << away.cells << " cells)\n";
}

inline void run_residence_sweep(const ExperimentConfig& c, ArtifactSink& sink,
                                std::ostringstream& summary) {
    if (!c.sweep)
        throw std::runtime_error("config.sweep: missing for residence-sweep");
    const ResidenceReport report =
        run_sweep(*c.sweep, c.kernel, c.n_particles, c.grid(), c.seed,
                  BatchOptions{c.workers, {}});
    {
        const std::string p = sink.path("residence.csv");
        std::ofstream os(p);
        if (!os) throw std::runtime_error("cannot open " + p + " for writing");
        write_residence_csv(os, report,
                            artifact_comments(c, "crosser residence sweep"));
        if (!os) throw std::runtime_error("write failed: " + p);
    }
    summary << summarize(report);
}

inline void run_oracle(const ExperimentConfig& c, ArtifactSink& sink,
                       std::ostringstream& summary) {
    const GridSpec grid = c.grid();
    const ScalarField reference = solve_laplace(c.domain, grid, c.solver);
    write_field_csv(sink.path("oracle.csv"), reference,
                    artifact_comments(c, "mixed-boundary Laplace solution"));

    const std::string p = sink.path("flux.csv");
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p + " for writing");
    for (const auto& line :
         artifact_comments(c, "horizontal flux through vertical cuts"))
        os << "# " << line << '\n';
    os << "column,x,flux\n";
    double fmin = 0.0, fmax = 0.0;
    for (int i = 1; i < grid.nx; ++i) {
        const double f = flux_through(reference, i);
        if (i == 1 || f < fmin) fmin = f;
        if (i == 1 || f > fmax) fmax = f;
        os << i << ',' << format_double(i * grid.cell_size()) << ','
           << format_double(f) << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + p);

    summary << "Laplace oracle on " << grid.nx << "x" << grid.ny << " grid\n";
    summary << "  flux through vertical cuts: min " << fmin << ", max " << fmax
            << " (empty-strip reference "
            << (c.domain.rho_left - c.domain.rho_right) *
                   c.domain.strip.length_y / c.domain.strip.length_x
            << ")\n";
}

inline void run_msd_check(const ExperimentConfig& c, ArtifactSink& sink,
                          std::ostringstream& summary) {
    const double horizon = c.msd.horizon_over_tm * c.kernel.mean_flight_time;
    const auto table =
        msd_table(c.kernel, c.n_particles, horizon, c.msd.n_times, c.seed);
    const double fitted = fit_diffusion(table, 0.5 * horizon);
    const double predicted = diffusion_coefficient(c.kernel);

    const std::string p = sink.path("msd.csv");
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p + " for writing");
    for (const auto& line :
         artifact_comments(c, "free-space mean square displacement"))
        os << "# " << line << '\n';
    os << "time,msd,four_d_t\n";
    for (const auto& point : table)
        os << format_double(point.time) << ',' << format_double(point.msd)
           << ',' << format_double(4.0 * predicted * point.time) << '\n';
    if (!os) throw std::runtime_error("write failed: " + p);

    summary << "free-space MSD check\n";
    summary << "  particles: " << c.n_particles << ", horizon " << horizon
            << " (" << c.msd.n_times << " sample times)\n";
    summary << "  fitted D (t >= " << 0.5 * horizon << "): " << fitted << "\n";
    summary << "  predicted (3/8) t_m: " << predicted << "\n";
    summary << "  relative deviation: " << (fitted - predicted) / predicted
            << "\n";
}

}  // namespace detail

/// Runs one experiment end to end, writing all artifacts into
/// config.output_dir. On error every partially written file is removed and
/// the exception propagates.
inline RunResult run_experiment(const ExperimentConfig& c) {
    {
        const auto issues = validate(c.domain);
        if (!issues.empty()) {
            std::string joined;
            for (const auto& m : issues) {
                if (!joined.empty()) joined += "; ";
                joined += m;
            }
            throw std::runtime_error("config.domain: " + joined);
        }
    }
    check_grid_spec(c.grid());

    detail::ArtifactSink sink(c.output_dir);
    std::ostringstream summary;
    try {
        switch (c.mode) {
            case RunMode::stationary:
                detail::run_stationary(c, sink, summary);
                break;
            case RunMode::residence_sweep:
                detail::run_residence_sweep(c, sink, summary);
                break;
            case RunMode::oracle:
                detail::run_oracle(c, sink, summary);
                break;
            case RunMode::msd_check:
                detail::run_msd_check(c, sink, summary);
                break;
        }
        std::string text;
        for (const auto& line :
             detail::artifact_comments(c, "run summary"))
            text += "# " + line + "\n";
        text += summary.str();
        sink.write_text("summary.txt", text);
    } catch (...) {
        sink.discard_all();
        throw;
    }
    return RunResult{sink.written(), summary.str()};
}

}  // namespace stripmc
