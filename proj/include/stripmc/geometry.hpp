#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stripmc/vec2.hpp"

namespace stripmc {

/// Offset applied along the new velocity after every reflection, so the next
/// ray query cannot re-detect the boundary just left.
constexpr double kReflectionNudge = 1e-12;

/// The strip (0, length_x) x (0, length_y). Left/right sides are open
/// reservoir boundaries, top/bottom are specular walls.
struct StripSpec {
    double length_x{1.0};
    double length_y{1.0};

    bool operator==(const StripSpec&) const = default;
};

struct RectObstacle {
    Vec2 center;
    double half_width{0.0};
    double half_height{0.0};

    double min_x() const { return center.x - half_width; }
    double max_x() const { return center.x + half_width; }
    double min_y() const { return center.y - half_height; }
    double max_y() const { return center.y + half_height; }

    bool operator==(const RectObstacle&) const = default;
};

struct DiskObstacle {
    Vec2 center;
    double radius{0.0};

    bool operator==(const DiskObstacle&) const = default;
};

using Obstacle = std::variant<RectObstacle, DiskObstacle>;

/// The domain plus the reservoir densities: everything the dynamics needs.
/// Defaults describe the reference setup: a 4 x 1 strip between a unit
/// reservoir and a half-density one.
struct DomainConfig {
    StripSpec strip{4.0, 1.0};
    std::vector<Obstacle> obstacles;
    double rho_left{1.0};
    double rho_right{0.5};

    bool operator==(const DomainConfig&) const = default;
};

enum class BoundaryKind { elastic, open_left, open_right };

struct BoundaryHit {
    double time{0.0};        ///< travel time at unit speed
    Vec2 point;              ///< intersection point on the boundary
    Vec2 inward_normal;      ///< unit normal pointing into the domain
    BoundaryKind kind{BoundaryKind::elastic};
};

/// Specular reflection v' = v - 2 (n.v) n for unit v and n.
inline Vec2 reflect(Vec2 v, Vec2 n) {
    const double vn = dot(v, n);
    return {v.x - 2.0 * vn * n.x, v.y - 2.0 * vn * n.y};
}

namespace detail {

inline bool inside_rect(const RectObstacle& r, Vec2 p, double tol) {
    return p.x > r.min_x() + tol && p.x < r.max_x() - tol &&
           p.y > r.min_y() + tol && p.y < r.max_y() - tol;
}

inline bool inside_disk(const DiskObstacle& d, Vec2 p, double tol) {
    const double dx = p.x - d.center.x, dy = p.y - d.center.y;
    const double rr = d.radius - tol;
    return dx * dx + dy * dy < rr * rr;
}

inline bool inside_obstacle(const Obstacle& o, Vec2 p, double tol = 0.0) {
    if (const auto* r = std::get_if<RectObstacle>(&o))
        return inside_rect(*r, p, tol);
    return inside_disk(std::get<DiskObstacle>(o), p, tol);
}

/// Distance from p to the rectangle (0 if inside).
inline double rect_distance(const RectObstacle& r, Vec2 p) {
    const double dx = std::max({r.min_x() - p.x, 0.0, p.x - r.max_x()});
    const double dy = std::max({r.min_y() - p.y, 0.0, p.y - r.max_y()});
    return std::hypot(dx, dy);
}

inline double obstacle_gap(const Obstacle& a, const Obstacle& b) {
    if (const auto* ra = std::get_if<RectObstacle>(&a)) {
        if (const auto* rb = std::get_if<RectObstacle>(&b)) {
            const double gx = std::max(rb->min_x() - ra->max_x(),
                                       ra->min_x() - rb->max_x());
            const double gy = std::max(rb->min_y() - ra->max_y(),
                                       ra->min_y() - rb->max_y());
            if (gx <= 0.0 && gy <= 0.0) return std::max(gx, gy);
            return std::hypot(std::max(gx, 0.0), std::max(gy, 0.0));
        }
        const auto& d = std::get<DiskObstacle>(b);
        return rect_distance(*ra, d.center) - d.radius;
    }
    if (std::holds_alternative<RectObstacle>(b)) return obstacle_gap(b, a);
    const auto& da = std::get<DiskObstacle>(a);
    const auto& db = std::get<DiskObstacle>(b);
    return norm(da.center - db.center) - da.radius - db.radius;
}

/// Gap between an obstacle and the nearest strip side (negative if it pokes
/// out).
inline double strip_gap(const StripSpec& s, const Obstacle& o) {
    if (const auto* r = std::get_if<RectObstacle>(&o)) {
        return std::min({r->min_x(), s.length_x - r->max_x(), r->min_y(),
                         s.length_y - r->max_y()});
    }
    const auto& d = std::get<DiskObstacle>(o);
    return std::min({d.center.x, s.length_x - d.center.x, d.center.y,
                     s.length_y - d.center.y}) -
           d.radius;
}

}  // namespace detail

/// True if p lies in the closure of the domain (strip minus open obstacle
/// interiors), with a tolerance for points nudged onto boundaries.
inline bool contains(const DomainConfig& config, Vec2 p, double tol = 1e-9) {
    if (p.x < -tol || p.x > config.strip.length_x + tol || p.y < -tol ||
        p.y > config.strip.length_y + tol)
        return false;
    for (const auto& o : config.obstacles)
        if (detail::inside_obstacle(o, p, tol)) return false;
    return true;
}

/// Checks every domain invariant; returns one message per violation, empty
/// when the configuration is usable. Connectedness is checked by flood fill
/// on a 400x100 grid, which is conservative: passages narrower than a
/// validation cell may be reported as disconnecting the domain.
inline std::vector<std::string> validate(const DomainConfig& config) {
    std::vector<std::string> out;
    const auto& s = config.strip;
    if (!(s.length_x > 0.0))
        out.push_back("strip length_x must be positive");
    if (!(s.length_y > 0.0))
        out.push_back("strip length_y must be positive");
    if (config.rho_left < 0.0) out.push_back("rho_left must be nonnegative");
    if (config.rho_right < 0.0) out.push_back("rho_right must be nonnegative");
    if (!(config.rho_left + config.rho_right > 0.0))
        out.push_back("rho_left + rho_right must be positive");
    if (!out.empty()) return out;  // geometry checks need a sane strip

    for (std::size_t i = 0; i < config.obstacles.size(); ++i) {
        const auto& o = config.obstacles[i];
        if (const auto* r = std::get_if<RectObstacle>(&o)) {
            if (!(r->half_width > 0.0 && r->half_height > 0.0))
                out.push_back("obstacle " + std::to_string(i) +
                              " has nonpositive half-size");
        } else if (!(std::get<DiskObstacle>(o).radius > 0.0)) {
            out.push_back("obstacle " + std::to_string(i) +
                          " has nonpositive radius");
        }
        if (detail::strip_gap(s, o) <= 0.0)
            out.push_back("obstacle " + std::to_string(i) +
                          " touches strip boundary");
        for (std::size_t j = i + 1; j < config.obstacles.size(); ++j) {
            if (detail::obstacle_gap(o, config.obstacles[j]) <= 0.0)
                out.push_back("obstacles " + std::to_string(i) + " and " +
                              std::to_string(j) + " touch or overlap");
        }
    }
    if (!out.empty()) return out;

    if (!config.obstacles.empty()) {
        constexpr int vx = 400, vy = 100;
        const double hx = s.length_x / vx, hy = s.length_y / vy;
        std::vector<char> open(static_cast<std::size_t>(vx) * vy);
        std::size_t n_open = 0;
        for (int j = 0; j < vy; ++j) {
            for (int i = 0; i < vx; ++i) {
                const Vec2 c{(i + 0.5) * hx, (j + 0.5) * hy};
                bool blocked = false;
                for (const auto& o : config.obstacles)
                    blocked = blocked || detail::inside_obstacle(o, c);
                open[static_cast<std::size_t>(j) * vx + i] = !blocked;
                n_open += !blocked;
            }
        }
        std::vector<std::size_t> stack;
        std::size_t seen = 0;
        for (std::size_t k = 0; k < open.size(); ++k) {
            if (open[k]) {
                stack.push_back(k);
                open[k] = 0;
                break;
            }
        }
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            ++seen;
            const int i = static_cast<int>(k % vx), j = static_cast<int>(k / vx);
            const int ni[4] = {i - 1, i + 1, i, i};
            const int nj[4] = {j, j, j - 1, j + 1};
            for (int m = 0; m < 4; ++m) {
                if (ni[m] < 0 || ni[m] >= vx || nj[m] < 0 || nj[m] >= vy)
                    continue;
                const std::size_t nk =
                    static_cast<std::size_t>(nj[m]) * vx + ni[m];
                if (open[nk]) {
                    open[nk] = 0;
                    stack.push_back(nk);
                }
            }
        }
        if (seen != n_open)
            out.push_back("domain is disconnected (flood fill reached " +
                          std::to_string(seen) + " of " +
                          std::to_string(n_open) + " free cells)");
    }
    return out;
}

namespace detail {

struct Candidate {
    double time = std::numeric_limits<double>::infinity();
    Vec2 normal;
    BoundaryKind kind = BoundaryKind::elastic;
    bool corner = false;
};

inline void consider(Candidate& best, double t, Vec2 n, BoundaryKind k,
                     bool corner = false) {
    if (t > 0.0 && t < best.time) best = {t, n, k, corner};
}

inline void hit_rect(Candidate& best, const RectObstacle& r, Vec2 o, Vec2 d) {
    // Slab intersection; the entering face supplies the normal. A ray from
    // outside enters at t_near on the axis with the larger slab entry.
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    Vec2 n_near;
    bool tie = false;
    const double lo[2] = {r.min_x(), r.min_y()};
    const double hi[2] = {r.max_x(), r.max_y()};
    const double oo[2] = {o.x, o.y};
    const double dd[2] = {d.x, d.y};
    for (int ax = 0; ax < 2; ++ax) {
        if (dd[ax] == 0.0) {
            if (oo[ax] <= lo[ax] || oo[ax] >= hi[ax]) return;
            continue;
        }
        double t0 = (lo[ax] - oo[ax]) / dd[ax];
        double t1 = (hi[ax] - oo[ax]) / dd[ax];
        Vec2 n = ax == 0 ? Vec2{-1.0, 0.0} : Vec2{0.0, -1.0};
        if (t0 > t1) {
            std::swap(t0, t1);
            n = -n;
        }
        if (t0 > t_near) {
            t_near = t0;
            n_near = n;
            tie = false;
        } else if (t0 == t_near) {
            tie = true;
        }
        t_far = std::min(t_far, t1);
    }
    if (t_near > t_far || t_far <= 0.0) return;
    // Exact corner tie: no face normal is distinguished; reverse the
    // velocity, which reflect() produces for n = -d.
    consider(best, t_near, tie ? -d : n_near, BoundaryKind::elastic, tie);
}

inline void hit_disk(Candidate& best, const DiskObstacle& dk, Vec2 o, Vec2 d) {
    const Vec2 oc = o - dk.center;
    const double b = dot(oc, d);
    const double c = dot(oc, oc) - dk.radius * dk.radius;
    const double disc = b * b - c;
    if (disc <= 0.0) return;
    const double sq = std::sqrt(disc);
    for (const double t : {-b - sq, -b + sq}) {
        if (t > 0.0 && t < best.time) {
            const Vec2 p = o + t * d;
            best = {t, normalized(p - dk.center), BoundaryKind::elastic, false};
            return;  // roots are ordered, the first positive one wins
        }
    }
}

}  // namespace detail

/// Earliest boundary intersection of the ray origin + t*direction with
/// t in (0, max_time], or nullopt if the segment stays interior. The caller
/// guarantees origin is in the closure of the domain and |direction| = 1.
inline std::optional<BoundaryHit> first_hit(const DomainConfig& config,
                                            Vec2 origin, Vec2 direction,
                                            double max_time) {
    detail::Candidate best;
    const auto& s = config.strip;
    if (direction.x < 0.0)
        detail::consider(best, -origin.x / direction.x, {1.0, 0.0},
                         BoundaryKind::open_left);
    if (direction.x > 0.0)
        detail::consider(best, (s.length_x - origin.x) / direction.x,
                         {-1.0, 0.0}, BoundaryKind::open_right);
    if (direction.y < 0.0)
        detail::consider(best, -origin.y / direction.y, {0.0, 1.0},
                         BoundaryKind::elastic);
    if (direction.y > 0.0)
        detail::consider(best, (s.length_y - origin.y) / direction.y,
                         {0.0, -1.0}, BoundaryKind::elastic);
    for (const auto& o : config.obstacles) {
        if (const auto* r = std::get_if<RectObstacle>(&o))
            detail::hit_rect(best, *r, origin, direction);
        else
            detail::hit_disk(best, std::get<DiskObstacle>(o), origin,
                             direction);
    }
    if (best.time > max_time) return std::nullopt;
    BoundaryHit hit;
    hit.time = best.time;
    hit.point = origin + best.time * direction;
    // best.time is exact only up to rounding; keep hit points inside the
    // closed strip so downstream clipping never sees coordinates past a wall.
    hit.point.x = std::clamp(hit.point.x, 0.0, s.length_x);
    hit.point.y = std::clamp(hit.point.y, 0.0, s.length_y);
    hit.inward_normal = best.normal;
    hit.kind = best.kind;
    return hit;
}

}  // namespace stripmc
