#pragma once

#include <cmath>

#include "stripmc/geometry.hpp"
#include "stripmc/rng.hpp"
#include "stripmc/vec2.hpp"

namespace stripmc {

/// Hard-disk velocity-jump kernel: flight times are exponential with mean
/// mean_flight_time, impact parameters uniform on [-1, 1].
struct KernelParams {
    double mean_flight_time{1.0};

    bool operator==(const KernelParams&) const = default;
};

/// Deflection for impact parameter delta in [-1, 1]. The scattering angle is
/// theta = pi - 2 asin(delta); cos/sin are evaluated in closed form
/// (c = 2 delta^2 - 1, s = 2 delta sqrt(1 - delta^2)) so no trig calls and
/// c^2 + s^2 = 1 up to rounding. delta = 0 is head-on (v -> -v), |delta| = 1
/// is grazing (v unchanged).
inline Vec2 scatter(Vec2 v, double delta) {
    const double c = 2.0 * delta * delta - 1.0;
    const double s = 2.0 * delta * std::sqrt(1.0 - delta * delta);
    return rotate_cs(v, c, s);
}

inline double sample_impact_parameter(RngStream& rng) {
    return 2.0 * rng.uniform01() - 1.0;
}

inline double sample_flight_time(const KernelParams& kernel, RngStream& rng) {
    return rng.exponential(kernel.mean_flight_time);
}

/// Freshly injected particle: position on an open side, inward velocity.
struct EntryState {
    Vec2 position;
    Vec2 velocity;        ///< unit speed
    bool from_left{true};
};

/// Samples reservoir injections: side with probability proportional to the
/// reservoir density, height uniform, direction uniform on the inward
/// half-circle.
inline EntryState sample_entry(const DomainConfig& config, RngStream& rng) {
    EntryState e;
    const double total = config.rho_left + config.rho_right;
    e.from_left = rng.uniform01() * total < config.rho_left;
    // open01 keeps the height off the corners and the angle on the open
    // half-circle, so injected particles always point strictly inward.
    const double y = rng.open01() * config.strip.length_y;
    const double angle = (rng.open01() - 0.5) * kPi;
    if (e.from_left) {
        e.position = {0.0, y};
        e.velocity = unit_from_angle(angle);
    } else {
        e.position = {config.strip.length_x, y};
        e.velocity = unit_from_angle(kPi - angle);
    }
    return e;
}

/// Diffusion coefficient of the free kernel, D = (3/8) * mean flight time:
/// the first angular harmonic of the deflection law has eigenvalue
/// E[cos theta] = -1/3, so velocity autocorrelation decays at rate
/// (4/3)/t_m and D = (1/2) * (3/4) t_m.
inline double diffusion_coefficient(const KernelParams& kernel) {
    return 0.375 * kernel.mean_flight_time;
}

}  // namespace stripmc
