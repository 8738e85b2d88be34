#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stripmc/geometry.hpp"
#include "stripmc/vec2.hpp"

namespace stripmc {

/// Uniform grid of square cells covering the strip. Cell (i, j) covers
/// [i h, (i+1) h] x [j h, (j+1) h] with h = length_x / n_x = length_y / n_y.
struct GridSpec {
    int nx{1};
    int ny{1};
    double length_x{1.0};
    double length_y{1.0};

    double cell_size() const { return length_x / nx; }
    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + i;
    }
    Vec2 cell_center(int i, int j) const {
        const double h = cell_size();
        return {(i + 0.5) * h, (j + 0.5) * h};
    }
    bool operator==(const GridSpec&) const = default;
};

inline void check_grid_spec(const GridSpec& g) {
    if (g.nx < 1 || g.ny < 1)
        throw std::invalid_argument("grid must have at least one cell");
    if (!(g.length_x > 0.0) || !(g.length_y > 0.0))
        throw std::invalid_argument("grid extents must be positive");
    const double hx = g.length_x / g.nx, hy = g.length_y / g.ny;
    if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
        throw std::invalid_argument("grid cells must be square");
}

/// Mask flags cells whose center lies strictly inside an obstacle.
inline std::vector<std::uint8_t> make_obstacle_mask(const GridSpec& g,
                                                    const DomainConfig& config) {
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.cell_center(i, j);
            for (const auto& o : config.obstacles) {
                if (detail::inside_obstacle(o, c)) {
                    mask[g.index(i, j)] = 1;
                    break;
                }
            }
        }
    }
    return mask;
}

/// One-cell dilation (8-neighborhood) of a mask; used to exclude sliver
/// cells straddling obstacle boundaries from error statistics.
inline std::vector<std::uint8_t> dilate_mask(
    const GridSpec& g, const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint8_t> out(mask);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!mask[g.index(i, j)]) continue;
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const int ii = i + di, jj = j + dj;
                    if (ii >= 0 && ii < g.nx && jj >= 0 && jj < g.ny)
                        out[g.index(ii, jj)] = 1;
                }
            }
        }
    }
    return out;
}

/// Unmasked cells whose closed cell rectangle still meets an obstacle: their
/// sojourn estimates average over a partially blocked cell and are biased.
inline std::vector<std::uint8_t> make_sliver_flags(
    const GridSpec& g, const DomainConfig& config,
    const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint8_t> flags(g.size(), 0);
    const double h = g.cell_size();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            if (mask[k]) continue;
            const double x0 = i * h, x1 = (i + 1) * h;
            const double y0 = j * h, y1 = (j + 1) * h;
            for (const auto& o : config.obstacles) {
                bool meets = false;
                if (const auto* r = std::get_if<RectObstacle>(&o)) {
                    meets = x1 > r->min_x() && x0 < r->max_x() &&
                            y1 > r->min_y() && y0 < r->max_y();
                } else {
                    const auto& d = std::get<DiskObstacle>(o);
                    const double cx =
                        std::clamp(d.center.x, x0, x1) - d.center.x;
                    const double cy =
                        std::clamp(d.center.y, y0, y1) - d.center.y;
                    meets = cx * cx + cy * cy < d.radius * d.radius;
                }
                if (meets) {
                    flags[k] = 1;
                    break;
                }
            }
        }
    }
    return flags;
}

/// Accumulated sojourn time per cell.
struct SojournGrid {
    GridSpec spec;
    std::vector<double> time_sum;
    std::vector<std::uint8_t> obstacle_mask;

    SojournGrid() = default;
    SojournGrid(const GridSpec& g, const DomainConfig& config)
        : spec(g), time_sum(g.size(), 0.0),
          obstacle_mask(make_obstacle_mask(g, config)) {
        check_grid_spec(g);
    }
};

/// A real-valued field on the grid (h_{t_m}, the Laplace solution, error
/// maps). Masked cells carry NaN.
struct ScalarField {
    GridSpec spec;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g)
        : spec(g), values(g.size(), 0.0), mask(g.size(), 0) {
        check_grid_spec(g);
    }

    double& at(int i, int j) { return values[spec.index(i, j)]; }
    double at(int i, int j) const { return values[spec.index(i, j)]; }
    bool masked(int i, int j) const { return mask[spec.index(i, j)] != 0; }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV layout: '#' comment lines, a "nx,ny,Lx,Ly" header line with its value
/// line, then n_y data rows (j = 0 first) of n_x comma-separated values.
/// Masked cells are written as "nan".
inline void write_field_csv(std::ostream& os, const ScalarField& f,
                            const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << "nx,ny,Lx,Ly\n";
    os << f.spec.nx << ',' << f.spec.ny << ','
       << detail::format_double(f.spec.length_x) << ','
       << detail::format_double(f.spec.length_y) << '\n';
    for (int j = 0; j < f.spec.ny; ++j) {
        for (int i = 0; i < f.spec.nx; ++i) {
            if (i) os << ',';
            if (f.masked(i, j))
                os << "nan";
            else
                os << detail::format_double(f.at(i, j));
        }
        os << '\n';
    }
}

inline void write_field_csv(const std::string& path, const ScalarField& f,
                            const std::vector<std::string>& comments = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field_csv(os, f, comments);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline ScalarField read_field_csv(std::istream& is) {
    std::string line;
    auto next_data_line = [&](std::string& out) {
        while (std::getline(is, out)) {
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty() && out[0] != '#') return true;
        }
        return false;
    };
    if (!next_data_line(line) || line != "nx,ny,Lx,Ly")
        throw std::runtime_error("field CSV: missing nx,ny,Lx,Ly header");
    if (!next_data_line(line))
        throw std::runtime_error("field CSV: missing spec values");
    GridSpec g;
    {
        std::istringstream ss(line);
        char comma;
        if (!(ss >> g.nx >> comma >> g.ny >> comma >> g.length_x >> comma >>
              g.length_y))
            throw std::runtime_error("field CSV: bad spec line");
    }
    check_grid_spec(g);
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j) {
        if (!next_data_line(line))
            throw std::runtime_error("field CSV: truncated data");
        std::istringstream ss(line);
        std::string tok;
        for (int i = 0; i < g.nx; ++i) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("field CSV: short row");
            const double v = std::strtod(tok.c_str(), nullptr);
            if (std::isnan(v)) {
                f.mask[g.index(i, j)] = 1;
                f.at(i, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                f.at(i, j) = v;
            }
        }
    }
    return f;
}

inline ScalarField read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field_csv(is);
}

/// Walks the straight segment a -> b across the grid, calling
/// f(i, j, slice_length) for every cell traversed. Slices telescope: their
/// sum equals |b - a| up to rounding. Endpoints are clamped into the grid,
/// so callers may pass points sitting exactly on the outer boundary.
template <typename F>
inline void for_each_segment_cell(const GridSpec& g, Vec2 a, Vec2 b, F&& f) {
    const Vec2 d = b - a;
    const double len = norm(d);
    if (len == 0.0) return;
    const double inv_len = 1.0 / len;
    const Vec2 dir{d.x * inv_len, d.y * inv_len};
    const double h = g.cell_size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    int i = std::clamp(static_cast<int>(std::floor(a.x / h)), 0, g.nx - 1);
    int j = std::clamp(static_cast<int>(std::floor(a.y / h)), 0, g.ny - 1);
    const int step_i = dir.x > 0.0 ? 1 : -1;
    const int step_j = dir.y > 0.0 ? 1 : -1;
    // Parameter (arc length) at which the ray leaves the current cell
    // through a vertical / horizontal face.
    double t_max_x = inf, t_max_y = inf, dt_x = inf, dt_y = inf;
    if (dir.x != 0.0) {
        const double face = (dir.x > 0.0 ? i + 1 : i) * h;
        t_max_x = (face - a.x) / dir.x;
        dt_x = h / std::abs(dir.x);
    }
    if (dir.y != 0.0) {
        const double face = (dir.y > 0.0 ? j + 1 : j) * h;
        t_max_y = (face - a.y) / dir.y;
        dt_y = h / std::abs(dir.y);
    }

    double t = 0.0;
    while (true) {
        const double t_exit = std::min(t_max_x, t_max_y);
        if (t_exit >= len) {
            f(i, j, len - t);
            return;
        }
        f(i, j, t_exit - t);
        t = t_exit;
        if (t_max_x <= t_max_y) {
            i += step_i;
            t_max_x += dt_x;
            if (i < 0 || i >= g.nx) return;  // grazing exit along the border
        } else {
            j += step_j;
            t_max_y += dt_y;
            if (j < 0 || j >= g.ny) return;
        }
    }
}

}  // namespace stripmc
