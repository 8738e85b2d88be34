#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stripmc/geometry.hpp"
#include "stripmc/grid.hpp"
#include "stripmc/rng.hpp"
#include "stripmc/scattering.hpp"
#include "stripmc/vec2.hpp"

namespace stripmc {

enum class Side : int { left = 0, right = 1 };

/// L = {x1 < x_left}, R = {x1 > x_right}, C = the slab between.
struct RegionDecomposition {
    double x_left{0.0};
    double x_right{0.0};
    bool operator==(const RegionDecomposition&) const = default;
};

/// Default split: the x-extent of the obstacles' bounding box, or the whole
/// strip as C when there are none.
inline RegionDecomposition default_regions(const DomainConfig& config) {
    if (config.obstacles.empty()) return {0.0, config.strip.length_x};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& o : config.obstacles) {
        if (const auto* r = std::get_if<RectObstacle>(&o)) {
            lo = std::min(lo, r->min_x());
            hi = std::max(hi, r->max_x());
        } else {
            const auto& d = std::get<DiskObstacle>(o);
            lo = std::min(lo, d.center.x - d.radius);
            hi = std::max(hi, d.center.x + d.radius);
        }
    }
    return {lo, hi};
}

struct ParticleState {
    Vec2 position;
    Vec2 velocity;  ///< unit speed
    double clock{0.0};
};

struct TrajectoryOutcome {
    Side entry_side{Side::left};
    Side exit_side{Side::left};
    double residence_time{0.0};
    std::array<double, 3> region_times{};  ///< (t_L, t_C, t_R)
    std::int64_t n_scatters{0};
    bool aborted{false};
};

struct TransportOptions {
    std::int64_t max_events{10'000'000};  ///< reflections + scatters before abort
    RegionDecomposition regions{0.0, std::numeric_limits<double>::infinity()};
    bool check_containment{false};  ///< debug: assert segment midpoints stay in Ω
};

namespace detail {

/// Fraction of the segment with x-range [ax -> bx] lying below plane.
inline double fraction_below(double ax, double bx, double plane) {
    if (ax == bx) return ax < plane ? 1.0 : 0.0;
    const double s = (plane - ax) / (bx - ax);
    const double c = std::clamp(s, 0.0, 1.0);
    return bx > ax ? c : 1.0 - c;
}

}  // namespace detail

/// Runs one trajectory from a given state until it leaves through an open
/// boundary. deposit(a, b) is invoked for every straight sub-segment,
/// including zero-length ones is avoided (reflection chains deposit nothing).
template <typename DepositFn>
TrajectoryOutcome trace_from(const DomainConfig& config,
                             const KernelParams& kernel,
                             const TransportOptions& opt, ParticleState state,
                             Side entry_side, RngStream& rng,
                             DepositFn&& deposit) {
    TrajectoryOutcome out;
    out.entry_side = entry_side;
    double length = 0.0, t_left = 0.0, t_right = 0.0;
    std::int64_t events = 0;
    double remaining = sample_flight_time(kernel, rng);
    for (;;) {
        const auto hit =
            first_hit(config, state.position, state.velocity, remaining);
        const Vec2 target =
            hit ? hit->point : state.position + remaining * state.velocity;
        const double seg = hit ? hit->time : remaining;
        if (seg > 0.0) {
            deposit(state.position, target);
            length += seg;
            t_left += seg * detail::fraction_below(state.position.x, target.x,
                                                   opt.regions.x_left);
            t_right += seg * (1.0 - detail::fraction_below(state.position.x,
                                                           target.x,
                                                           opt.regions.x_right));
            if (opt.check_containment) {
                const Vec2 mid = 0.5 * (state.position + target);
                if (!contains(config, mid))
                    throw std::logic_error("trajectory left the domain");
            }
        }
        state.clock += seg;
        if (hit) {
            remaining -= hit->time;
            if (hit->kind != BoundaryKind::elastic) {
                out.exit_side = hit->kind == BoundaryKind::open_left
                                    ? Side::left
                                    : Side::right;
                break;
            }
            state.velocity = reflect(state.velocity, hit->inward_normal);
            state.position = hit->point + kReflectionNudge * state.velocity;
        } else {
            state.position = target;
            state.velocity = scatter(state.velocity, sample_impact_parameter(rng));
            ++out.n_scatters;
            remaining = sample_flight_time(kernel, rng);
        }
        if (++events >= opt.max_events) {
            out.aborted = true;
            out.exit_side = entry_side;
            break;
        }
    }
    out.residence_time = length;
    const double t_center = std::max(0.0, length - t_left - t_right);
    out.region_times = {t_left, t_center, t_right};
    return out;
}

/// Injects a fresh particle from the reservoirs and traces it to exit.
template <typename DepositFn>
TrajectoryOutcome simulate_particle(const DomainConfig& config,
                                    const KernelParams& kernel,
                                    const TransportOptions& opt,
                                    RngStream& rng, DepositFn&& deposit) {
    const EntryState e = sample_entry(config, rng);
    return trace_from(config, kernel, opt, ParticleState{e.position, e.velocity, 0.0},
                      e.from_left ? Side::left : Side::right, rng,
                      static_cast<DepositFn&&>(deposit));
}

/// All batch accumulators are 2^-30-quantized fixed point: per-particle
/// contributions are rounded once, and int64 addition is associative, so
/// merges are bit-identical for any worker count or merge order.
constexpr double kTimeScale = 1073741824.0;  // 2^30
constexpr int kSubBatches = 20;

inline std::int64_t quantize_time(double t) {
    return std::llround(t * kTimeScale);
}

struct ClassTally {
    std::int64_t count{0};
    std::int64_t residence_fp{0};

    double mean_residence() const {
        return count ? static_cast<double>(residence_fp) / kTimeScale / count
                     : 0.0;
    }
    bool operator==(const ClassTally&) const = default;
};

struct BatchResult {
    GridSpec grid;
    std::int64_t n_particles{0};
    std::vector<std::int64_t> time_fp;          ///< sojourn time per cell
    std::vector<std::int64_t> crosser_time_fp;  ///< same, left->right crossers
    std::vector<std::int64_t> crosser_visits;   ///< crossers touching the cell
    /// classes[entry][exit]; aborted trajectories are tallied in `aborted`
    /// only, so class counts sum to n_particles - aborted.
    std::array<std::array<ClassTally, 2>, 2> classes{};
    std::array<std::int64_t, 3> crosser_region_fp{};  ///< (L, C, R) sums
    std::array<std::int64_t, kSubBatches> sub_count{};        ///< crossers
    std::array<std::int64_t, kSubBatches> sub_residence_fp{};
    std::int64_t aborted{0};
    std::int64_t total_scatters{0};

    const ClassTally& tally(Side entry, Side exit) const {
        return classes[static_cast<int>(entry)][static_cast<int>(exit)];
    }
    const ClassTally& crossers() const { return tally(Side::left, Side::right); }

    bool operator==(const BatchResult&) const = default;
};

struct BatchOptions {
    int workers{1};
    TransportOptions transport{};
};

namespace detail {

inline void merge_into(BatchResult& acc, const BatchResult& part) {
    for (std::size_t k = 0; k < acc.time_fp.size(); ++k) {
        acc.time_fp[k] += part.time_fp[k];
        acc.crosser_time_fp[k] += part.crosser_time_fp[k];
        acc.crosser_visits[k] += part.crosser_visits[k];
    }
    for (int e = 0; e < 2; ++e) {
        for (int x = 0; x < 2; ++x) {
            acc.classes[e][x].count += part.classes[e][x].count;
            acc.classes[e][x].residence_fp += part.classes[e][x].residence_fp;
        }
    }
    for (int r = 0; r < 3; ++r)
        acc.crosser_region_fp[r] += part.crosser_region_fp[r];
    for (int b = 0; b < kSubBatches; ++b) {
        acc.sub_count[b] += part.sub_count[b];
        acc.sub_residence_fp[b] += part.sub_residence_fp[b];
    }
    acc.aborted += part.aborted;
    acc.total_scatters += part.total_scatters;
}

}  // namespace detail

/// Simulates particles [first, last) with stream_id = particle index into a
/// fresh partial result. The building block of run_batch; exposed so tests
/// can exercise arbitrary partitions.
inline BatchResult run_range(const DomainConfig& config,
                             const KernelParams& kernel, std::int64_t first,
                             std::int64_t last, std::int64_t n_total,
                             const GridSpec& grid, std::uint64_t seed,
                             const TransportOptions& transport) {
    BatchResult r;
    r.grid = grid;
    r.n_particles = last - first;
    r.time_fp.assign(grid.size(), 0);
    r.crosser_time_fp.assign(grid.size(), 0);
    r.crosser_visits.assign(grid.size(), 0);

    std::vector<double> scratch(grid.size(), 0.0);
    std::vector<std::size_t> touched;
    touched.reserve(1024);
    const auto deposit = [&](Vec2 a, Vec2 b) {
        for_each_segment_cell(grid, a, b, [&](int i, int j, double len) {
            if (len <= 0.0) return;
            const std::size_t k = grid.index(i, j);
            if (scratch[k] == 0.0) touched.push_back(k);
            scratch[k] += len;
        });
    };

    for (std::int64_t idx = first; idx < last; ++idx) {
        RngStream rng(seed, static_cast<std::uint64_t>(idx));
        const TrajectoryOutcome o =
            simulate_particle(config, kernel, transport, rng, deposit);
        if (o.aborted) {
            for (const std::size_t k : touched) scratch[k] = 0.0;
            touched.clear();
            ++r.aborted;
            continue;
        }
        const bool crossing =
            o.entry_side == Side::left && o.exit_side == Side::right;
        for (const std::size_t k : touched) {
            const std::int64_t fp = quantize_time(scratch[k]);
            r.time_fp[k] += fp;
            if (crossing) {
                r.crosser_time_fp[k] += fp;
                ++r.crosser_visits[k];
            }
            scratch[k] = 0.0;
        }
        touched.clear();

        const std::int64_t q_left = quantize_time(o.region_times[0]);
        const std::int64_t q_center = quantize_time(o.region_times[1]);
        const std::int64_t q_right = quantize_time(o.region_times[2]);
        const std::int64_t q_res = q_left + q_center + q_right;
        auto& tally = r.classes[static_cast<int>(o.entry_side)]
                               [static_cast<int>(o.exit_side)];
        ++tally.count;
        tally.residence_fp += q_res;
        r.total_scatters += o.n_scatters;
        if (crossing) {
            r.crosser_region_fp[0] += q_left;
            r.crosser_region_fp[1] += q_center;
            r.crosser_region_fp[2] += q_right;
            const int b = static_cast<int>(idx * kSubBatches / n_total);
            ++r.sub_count[b];
            r.sub_residence_fp[b] += q_res;
        }
    }
    return r;
}

/// N independent trajectories, RNG stream = particle index. The result is a
/// pure function of (config, kernel, n_particles, grid, seed, transport):
/// the worker count changes only the partition, and partials merge by
/// integer addition.
inline BatchResult run_batch(const DomainConfig& config,
                             const KernelParams& kernel,
                             std::int64_t n_particles, const GridSpec& grid,
                             std::uint64_t seed, const BatchOptions& opt = {}) {
    if (n_particles < 1)
        throw std::invalid_argument("n_particles must be at least 1");
    check_grid_spec(grid);
    {
        const auto issues = validate(config);
        if (!issues.empty())
            throw std::invalid_argument("invalid domain: " + issues.front());
    }
    TransportOptions transport = opt.transport;
    if (transport.regions == RegionDecomposition{0.0, std::numeric_limits<double>::infinity()})
        transport.regions = default_regions(config);

    const int workers =
        std::max(1, std::min<int>(opt.workers,
                                  static_cast<int>(std::min<std::int64_t>(
                                      n_particles, 1024))));
    std::vector<BatchResult> parts(static_cast<std::size_t>(workers));
    {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const std::int64_t first = n_particles * w / workers;
            const std::int64_t last = n_particles * (w + 1) / workers;
            pool.emplace_back([&, w, first, last] {
                parts[static_cast<std::size_t>(w)] =
                    run_range(config, kernel, first, last, n_particles, grid,
                              seed, transport);
            });
        }
        for (auto& t : pool) t.join();
    }
    BatchResult total = std::move(parts[0]);
    for (int w = 1; w < workers; ++w)
        detail::merge_into(total, parts[static_cast<std::size_t>(w)]);
    total.n_particles = n_particles;
    return total;
}

/// Materializes the sojourn field in time units.
inline SojournGrid to_sojourn_grid(const BatchResult& r,
                                   const DomainConfig& config) {
    SojournGrid g(r.grid, config);
    for (std::size_t k = 0; k < g.time_sum.size(); ++k)
        g.time_sum[k] = static_cast<double>(r.time_fp[k]) / kTimeScale;
    return g;
}

/// Crosser statistics with a batch-means standard error (kSubBatches batches
/// by particle index). Batches with zero crossers are skipped.
struct CrosserStats {
    std::int64_t count{0};
    double mean_residence{0.0};
    double standard_error{0.0};
    std::array<double, 3> mean_region_times{};
};

inline CrosserStats crosser_stats(const BatchResult& r) {
    CrosserStats s;
    s.count = r.crossers().count;
    if (s.count == 0) return s;
    s.mean_residence = r.crossers().mean_residence();
    for (int k = 0; k < 3; ++k)
        s.mean_region_times[k] =
            static_cast<double>(r.crosser_region_fp[k]) / kTimeScale /
            static_cast<double>(s.count);
    double sum = 0.0, sum2 = 0.0;
    int used = 0;
    for (int b = 0; b < kSubBatches; ++b) {
        if (r.sub_count[b] == 0) continue;
        const double m = static_cast<double>(r.sub_residence_fp[b]) /
                         kTimeScale / static_cast<double>(r.sub_count[b]);
        sum += m;
        sum2 += m * m;
        ++used;
    }
    if (used >= 2) {
        const double mean = sum / used;
        const double var = std::max(0.0, sum2 / used - mean * mean) *
                           (static_cast<double>(used) / (used - 1));
        s.standard_error = std::sqrt(var / used);
    }
    return s;
}

}  // namespace stripmc
