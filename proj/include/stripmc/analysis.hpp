#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stripmc/density.hpp"
#include "stripmc/grid.hpp"
#include "stripmc/rng.hpp"
#include "stripmc/scattering.hpp"
#include "stripmc/transport.hpp"

namespace stripmc {

enum class SweepParameter {
    obstacle_height,
    obstacle_width,
    obstacle_center_x,
    obstacle_side,  ///< square side: width and height together
};

inline const char* to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::obstacle_height: return "obstacle_height";
        case SweepParameter::obstacle_width: return "obstacle_width";
        case SweepParameter::obstacle_center_x: return "obstacle_center_x";
        case SweepParameter::obstacle_side: return "obstacle_side";
    }
    return "?";
}

inline SweepParameter sweep_parameter_from_string(const std::string& s) {
    for (const auto p :
         {SweepParameter::obstacle_height, SweepParameter::obstacle_width,
          SweepParameter::obstacle_center_x, SweepParameter::obstacle_side})
        if (s == to_string(p)) return p;
    throw std::invalid_argument("unknown sweep parameter: " + s);
}

/// A family of domains: base_config plus one rectangle whose named parameter
/// runs over `values`. Heights, widths and sides are full lengths; center_x
/// is a coordinate.
struct SweepSpec {
    DomainConfig base_config;
    SweepParameter varied_parameter{SweepParameter::obstacle_height};
    std::vector<double> values;
    RectObstacle obstacle_template;

    bool operator==(const SweepSpec&) const = default;
};

inline DomainConfig sweep_config(const SweepSpec& s, double value) {
    DomainConfig config = s.base_config;
    RectObstacle r = s.obstacle_template;
    switch (s.varied_parameter) {
        case SweepParameter::obstacle_height:
            r.half_height = 0.5 * value;
            break;
        case SweepParameter::obstacle_width:
            r.half_width = 0.5 * value;
            break;
        case SweepParameter::obstacle_center_x:
            r.center.x = value;
            break;
        case SweepParameter::obstacle_side:
            r.half_width = r.half_height = 0.5 * value;
            break;
    }
    config.obstacles.push_back(r);
    return config;
}

struct ResidenceRow {
    double value{0.0};  ///< swept parameter value (NaN on the baseline row)
    std::int64_t crossers{0};
    std::int64_t right_exits{0};  ///< all non-aborted right exits
    double mean_residence{0.0};
    double standard_error{0.0};
    std::array<double, 3> mean_region_times{};
    std::int64_t aborted{0};
};

struct ResidenceReport {
    SweepParameter parameter{SweepParameter::obstacle_height};
    std::vector<ResidenceRow> rows;  ///< ordered by parameter value
    ResidenceRow baseline;           ///< base_config without the swept obstacle
};

namespace detail {

inline ResidenceRow make_row(double value, const BatchResult& batch) {
    ResidenceRow row;
    row.value = value;
    const CrosserStats s = crosser_stats(batch);
    row.crossers = s.count;
    row.right_exits = batch.tally(Side::left, Side::right).count +
                      batch.tally(Side::right, Side::right).count;
    row.mean_residence = s.mean_residence;
    row.standard_error = s.standard_error;
    row.mean_region_times = s.mean_region_times;
    row.aborted = batch.aborted;
    return row;
}

}  // namespace detail

/// Per-value seeds are derived from the value's bit pattern, so inserting or
/// reordering sweep values never changes the stream of an existing one; the
/// baseline runs under the base seed itself and is bit-identical to a
/// standalone run_batch on base_config.
inline ResidenceReport run_sweep(const SweepSpec& spec,
                                 const KernelParams& params,
                                 std::int64_t n_particles,
                                 const GridSpec& grid, std::uint64_t seed,
                                 const BatchOptions& opt = {}) {
    ResidenceReport report;
    report.parameter = spec.varied_parameter;
    for (const double value : spec.values) {
        const DomainConfig config = sweep_config(spec, value);
        const auto issues = validate(config);
        if (!issues.empty())
            throw std::invalid_argument(
                "sweep value " + detail::format_double(value) + ": " +
                issues.front());
        BatchOptions run_opt = opt;
        run_opt.transport.regions = default_regions(config);
        const BatchResult batch =
            run_batch(config, params, n_particles, grid,
                      mix_seed(seed, std::bit_cast<std::uint64_t>(value)),
                      run_opt);
        report.rows.push_back(detail::make_row(value, batch));
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ResidenceRow& a, const ResidenceRow& b) {
                  return a.value < b.value;
              });
    BatchOptions base_opt = opt;
    base_opt.transport.regions = default_regions(spec.base_config);
    const BatchResult base =
        run_batch(spec.base_config, params, n_particles, grid, seed, base_opt);
    report.baseline = detail::make_row(
        std::numeric_limits<double>::quiet_NaN(), base);
    return report;
}

/// Mean (t_L, t_C, t_R) over left->right crossers.
inline std::array<double, 3> region_times(const BatchResult& batch) {
    if (batch.crossers().count == 0)
        throw std::runtime_error("no crossing statistics");
    return crosser_stats(batch).mean_region_times;
}

inline std::array<double, 3> region_times(
    const std::vector<TrajectoryOutcome>& outcomes) {
    std::array<double, 3> sum{};
    std::int64_t n = 0;
    for (const auto& o : outcomes) {
        if (o.aborted || o.entry_side != Side::left ||
            o.exit_side != Side::right)
            continue;
        for (int k = 0; k < 3; ++k) sum[k] += o.region_times[k];
        ++n;
    }
    if (n == 0) throw std::runtime_error("no crossing statistics");
    for (int k = 0; k < 3; ++k) sum[k] /= static_cast<double>(n);
    return sum;
}

/// Mean time crossing particles spend in each cell: (crosser time sum) /
/// (number of crossers that visited). Never-visited and obstacle cells are
/// absent (masked, NaN).
inline ScalarField local_residence_map(const BatchResult& batch,
                                       const DomainConfig& config) {
    ScalarField f(batch.grid);
    f.mask = make_obstacle_mask(batch.grid, config);
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        if (!f.mask[k] && batch.crosser_visits[k] > 0) {
            f.values[k] = static_cast<double>(batch.crosser_time_fp[k]) /
                          kTimeScale /
                          static_cast<double>(batch.crosser_visits[k]);
        } else {
            f.mask[k] = 1;
            f.values[k] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return f;
}

/// Fraction of left-inserted particles that exit through the right
/// boundary. The denominator counts insertions through the left boundary
/// only; right-entering particles are excluded from both numerator and
/// denominator.
inline double crossing_fraction(const BatchResult& batch) {
    const std::int64_t left_in = batch.tally(Side::left, Side::left).count +
                                 batch.tally(Side::left, Side::right).count;
    if (left_in == 0) return 0.0;
    return static_cast<double>(batch.crossers().count) /
           static_cast<double>(left_in);
}

struct MsdPoint {
    double time{0.0};
    double msd{0.0};
};

/// Mean square displacement of the free velocity-jump process (no walls,
/// no reservoirs) at n_times equally spaced times up to horizon.
inline std::vector<MsdPoint> msd_table(const KernelParams& kernel,
                                       std::int64_t n_particles,
                                       double horizon, int n_times,
                                       std::uint64_t seed) {
    if (n_particles < 1 || n_times < 1 || !(horizon > 0.0))
        throw std::invalid_argument("msd_table: bad arguments");
    std::vector<double> acc(static_cast<std::size_t>(n_times), 0.0);
    std::vector<double> sample_t(static_cast<std::size_t>(n_times));
    for (int k = 0; k < n_times; ++k)
        sample_t[static_cast<std::size_t>(k)] = horizon * (k + 1) / n_times;
    for (std::int64_t p = 0; p < n_particles; ++p) {
        RngStream rng(seed, static_cast<std::uint64_t>(p));
        Vec2 pos{0.0, 0.0};
        Vec2 vel = unit_from_angle(2.0 * kPi * rng.uniform01());
        double t = 0.0;
        double flight = sample_flight_time(kernel, rng);
        int k = 0;
        while (k < n_times) {
            while (k < n_times && sample_t[static_cast<std::size_t>(k)] <= t + flight) {
                const Vec2 at = pos + (sample_t[static_cast<std::size_t>(k)] - t) * vel;
                acc[static_cast<std::size_t>(k)] += dot(at, at);
                ++k;
            }
            if (k >= n_times) break;
            pos += flight * vel;
            t += flight;
            vel = scatter(vel, sample_impact_parameter(rng));
            flight = sample_flight_time(kernel, rng);
        }
    }
    std::vector<MsdPoint> out(static_cast<std::size_t>(n_times));
    for (int k = 0; k < n_times; ++k)
        out[static_cast<std::size_t>(k)] = {
            sample_t[static_cast<std::size_t>(k)],
            acc[static_cast<std::size_t>(k)] / static_cast<double>(n_particles)};
    return out;
}

/// Through-origin least squares of MSD(t) = 4 D t over points with
/// t >= t_min.
inline double fit_diffusion(const std::vector<MsdPoint>& table, double t_min) {
    double st2 = 0.0, smt = 0.0;
    for (const auto& p : table) {
        if (p.time < t_min) continue;
        st2 += p.time * p.time;
        smt += p.msd * p.time;
    }
    if (st2 == 0.0)
        throw std::invalid_argument("fit_diffusion: no points above t_min");
    return smt / (4.0 * st2);
}

/// One row per sweep value, baseline first (value column "baseline").
inline void write_residence_csv(std::ostream& os,
                                const ResidenceReport& report,
                                const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << "parameter,value,crossers,right_exits,mean_residence,"
          "standard_error,mean_t_L,mean_t_C,mean_t_R,aborted\n";
    const auto row_out = [&](const ResidenceRow& r, const std::string& label) {
        os << to_string(report.parameter) << ',' << label << ',' << r.crossers
           << ',' << r.right_exits << ','
           << detail::format_double(r.mean_residence) << ','
           << detail::format_double(r.standard_error) << ','
           << detail::format_double(r.mean_region_times[0]) << ','
           << detail::format_double(r.mean_region_times[1]) << ','
           << detail::format_double(r.mean_region_times[2]) << ','
           << r.aborted << '\n';
    };
    row_out(report.baseline, "baseline");
    for (const auto& r : report.rows)
        row_out(r, detail::format_double(r.value));
}

inline std::string summarize(const ResidenceReport& report) {
    std::ostringstream os;
    os << "residence-time sweep over " << to_string(report.parameter) << "\n";
    os << "  baseline (no obstacle): mean " << report.baseline.mean_residence
       << " +- " << report.baseline.standard_error << " ("
       << report.baseline.crossers << " crossers)\n";
    for (const auto& r : report.rows) {
        os << "  value " << r.value << ": mean " << r.mean_residence << " +- "
           << r.standard_error << " (" << r.crossers << " crossers, "
           << r.right_exits << " right exits";
        if (r.aborted) os << ", " << r.aborted << " aborted";
        os << ")\n";
    }
    return os.str();
}

}  // namespace stripmc
