#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stripmc/geometry.hpp"
#include "stripmc/grid.hpp"

namespace stripmc {

struct SolverSettings {
    /// Bound on the discrete 5-point Laplacian |Delta_h u| (per length^2)
    /// on every unmasked cell; this, not the per-sweep update size, is what
    /// the convergence guarantee needs.
    double tolerance{1e-8};
    std::int64_t max_iterations{1'000'000};
    double relaxation{1.9};

    bool operator==(const SolverSettings&) const = default;
};

namespace detail {

/// Obstacle rectangles must sit exactly on grid lines: the mask then equals
/// the rectangle and the oracle solves the same geometry the Monte Carlo
/// sees. Returns an empty string when aligned.
inline std::string alignment_issue(const GridSpec& g,
                                   const DomainConfig& config) {
    const double h = g.cell_size();
    for (std::size_t n = 0; n < config.obstacles.size(); ++n) {
        const auto* r = std::get_if<RectObstacle>(&config.obstacles[n]);
        if (!r)
            return "obstacle " + std::to_string(n) +
                   " is a disk: the Laplace oracle supports rectangles only";
        for (const double e : {r->min_x(), r->max_x(), r->min_y(), r->max_y()}) {
            if (std::abs(e - std::round(e / h) * h) > 1e-9)
                return "obstacle " + std::to_string(n) +
                       " edges do not lie on cell boundaries; refine or "
                       "realign the grid so that they do";
        }
    }
    return {};
}

}  // namespace detail

/// Solves the mixed problem with 5-point SOR on cell centers: Dirichlet
/// rho_L / rho_R on the open sides via linear ghosts (2 rho - u), Neumann on
/// walls and obstacle faces via mirror ghosts. Sweep order is fixed
/// (lexicographic), so the result is deterministic.
inline ScalarField solve_laplace(const DomainConfig& config,
                                 const GridSpec& spec,
                                 const SolverSettings& settings = {}) {
    if (!(settings.tolerance > 0.0))
        throw std::invalid_argument("tolerance must be positive");
    if (!(settings.relaxation > 0.0 && settings.relaxation < 2.0))
        throw std::invalid_argument("relaxation must lie in (0, 2)");
    check_grid_spec(spec);
    {
        const auto issues = validate(config);
        if (!issues.empty())
            throw std::invalid_argument("invalid domain: " + issues.front());
        const std::string unaligned = detail::alignment_issue(spec, config);
        if (!unaligned.empty()) throw std::invalid_argument(unaligned);
    }

    const int nx = spec.nx, ny = spec.ny;
    const double h = spec.cell_size();
    const double rho_l = config.rho_left, rho_r = config.rho_right;
    const auto mask = make_obstacle_mask(spec, config);

    // Per-cell stencil: numer = sum(open neighbors) + fixed, u = numer/denom.
    std::vector<double> u(spec.size(), 0.5 * (rho_l + rho_r));
    std::vector<double> fixed(spec.size(), 0.0);
    std::vector<std::int8_t> denom(spec.size(), 0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = spec.index(i, j);
            if (mask[k]) continue;
            int d = 4;
            double fix = 0.0;
            // West/east: Dirichlet ghost beyond the strip, Neumann at
            // masked neighbors, plain coupling otherwise.
            if (i == 0) {
                d += 1;
                fix += 2.0 * rho_l;
            } else if (mask[spec.index(i - 1, j)]) {
                d -= 1;
            }
            if (i == nx - 1) {
                d += 1;
                fix += 2.0 * rho_r;
            } else if (mask[spec.index(i + 1, j)]) {
                d -= 1;
            }
            if (j == 0 || mask[spec.index(i, j - 1)]) d -= 1;
            if (j == ny - 1 || mask[spec.index(i, j + 1)]) d -= 1;
            denom[k] = static_cast<std::int8_t>(d);
            fixed[k] = fix;
        }
    }

    const double h2 = h * h;
    const double omega = settings.relaxation;
    const auto numer_at = [&](int i, int j, std::size_t k) {
        double numer = fixed[k];
        if (i > 0 && !mask[k - 1]) numer += u[k - 1];
        if (i < nx - 1 && !mask[k + 1]) numer += u[k + 1];
        if (j > 0 && !mask[k - nx]) numer += u[k - nx];
        if (j < ny - 1 && !mask[k + nx]) numer += u[k + nx];
        return numer;
    };

    double residual = std::numeric_limits<double>::infinity();
    std::int64_t sweeps = 0;
    while (sweeps < settings.max_iterations) {
        ++sweeps;
        double sweep_res = 0.0;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = spec.index(i, j);
                if (mask[k] || denom[k] == 0) continue;
                const double numer = numer_at(i, j, k);
                const double r = numer - denom[k] * u[k];
                sweep_res = std::max(sweep_res, std::abs(r));
                u[k] += omega * r / denom[k];
            }
        }
        if (sweep_res / h2 < settings.tolerance) {
            // The in-sweep residual mixes old and new values; certify the
            // frozen field before declaring convergence.
            residual = 0.0;
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    const std::size_t k = spec.index(i, j);
                    if (mask[k] || denom[k] == 0) continue;
                    residual = std::max(
                        residual, std::abs(numer_at(i, j, k) - denom[k] * u[k]));
                }
            }
            residual /= h2;
            if (residual < settings.tolerance) break;
        }
    }
    if (!(residual < settings.tolerance))
        throw std::runtime_error(
            "laplace solver did not converge within " +
            std::to_string(settings.max_iterations) +
            " sweeps; last residual " + detail::format_double(residual));

    ScalarField out(spec);
    out.mask = mask;
    for (std::size_t k = 0; k < u.size(); ++k)
        out.values[k] = (mask[k] || denom[k] == 0)
                            ? std::numeric_limits<double>::quiet_NaN()
                            : u[k];
    for (std::size_t k = 0; k < u.size(); ++k)
        if (!mask[k] && denom[k] == 0) out.mask[k] = 1;
    return out;
}

/// Total mass flux through the vertical grid line between columns i-1 and
/// i: minus the sum of centered differences across unmasked face pairs
/// (the h from the face integral cancels the h in the difference quotient).
/// Positive for left-to-right flow when rho_L > rho_R.
inline double flux_through(const ScalarField& field, int column_index) {
    const GridSpec& g = field.spec;
    if (column_index < 1 || column_index > g.nx - 1)
        throw std::invalid_argument(
            "flux column must lie strictly between the Dirichlet sides");
    double flux = 0.0;
    int open_faces = 0;
    for (int j = 0; j < g.ny; ++j) {
        if (field.masked(column_index, j) || field.masked(column_index - 1, j))
            continue;
        flux -= field.at(column_index, j) - field.at(column_index - 1, j);
        ++open_faces;
    }
    if (open_faces == 0)
        throw std::invalid_argument(
            "flux cut at column " + std::to_string(column_index) +
            " is fully masked (disconnected cut)");
    return flux;
}

}  // namespace stripmc
