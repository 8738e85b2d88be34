#pragma once

#include <cmath>

namespace stripmc {

constexpr double kPi = 3.14159265358979323846;

/// 2D vector, double precision. Positions and unit velocities alike.
struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr bool operator==(const Vec2&) const = default;

    constexpr Vec2 operator+(Vec2 r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(Vec2 r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2& operator+=(Vec2 r) { x += r.x; y += r.y; return *this; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Counterclockwise perpendicular.
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

/// Rotate v counterclockwise by the angle whose cosine/sine are given.
constexpr Vec2 rotate_cs(Vec2 v, double c, double s) {
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 normalized(Vec2 v) {
    const double n = norm(v);
    return {v.x / n, v.y / n};
}

/// Unit vector at angle theta from the +x axis.
inline Vec2 unit_from_angle(double theta) {
    return {std::cos(theta), std::sin(theta)};
}

}  // namespace stripmc
