#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stripmc/grid.hpp"
#include "stripmc/transport.hpp"

namespace stripmc {

struct NormalizeOptions {
    /// Impose rho_L on the single mid-height boundary cell instead of the
    /// column mean (strict replication of the one-point rule; noisier).
    bool single_cell{false};

    bool operator==(const NormalizeOptions&) const = default;
};

/// Scales the sojourn grid into the stationary density estimate h_{t_m}:
/// the constant c is fixed by requiring the mean over the leftmost column
/// holding unmasked cells to equal rho_left. Masked cells become NaN.
inline ScalarField normalize(const SojournGrid& grid,
                             const DomainConfig& config,
                             const NormalizeOptions& opt = {}) {
    const GridSpec& g = grid.spec;
    int col = -1;
    for (int i = 0; i < g.nx && col < 0; ++i)
        for (int j = 0; j < g.ny; ++j)
            if (!grid.obstacle_mask[g.index(i, j)]) {
                col = i;
                break;
            }
    if (col < 0) throw std::runtime_error("grid is fully masked");

    double sum = 0.0;
    int n = 0;
    if (opt.single_cell) {
        const int j = g.ny / 2;
        if (!grid.obstacle_mask[g.index(col, j)]) {
            sum = grid.time_sum[g.index(col, j)];
            n = 1;
        }
    }
    if (n == 0) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t k = g.index(col, j);
            if (!grid.obstacle_mask[k]) {
                sum += grid.time_sum[k];
                ++n;
            }
        }
    }
    if (!(sum > 0.0))
        throw std::runtime_error("insufficient statistics for normalization");
    const double c = config.rho_left * n / sum;

    ScalarField f(g);
    f.mask = grid.obstacle_mask;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        f.values[k] = f.mask[k]
                          ? std::numeric_limits<double>::quiet_NaN()
                          : c * grid.time_sum[k];
    return f;
}

/// Cellwise |field - reference| / reference on the shared mask.
inline ScalarField relative_error(const ScalarField& field,
                                  const ScalarField& reference) {
    if (!(field.spec == reference.spec))
        throw std::invalid_argument("relative_error: mismatched grid specs");
    if (field.mask != reference.mask)
        throw std::invalid_argument("relative_error: mismatched masks");
    ScalarField err(field.spec);
    err.mask = field.mask;
    for (std::size_t k = 0; k < err.values.size(); ++k) {
        if (err.mask[k]) {
            err.values[k] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        if (reference.values[k] == 0.0)
            throw std::invalid_argument(
                "relative_error: reference vanishes on an unmasked cell");
        err.values[k] =
            std::abs(field.values[k] - reference.values[k]) /
            std::abs(reference.values[k]);
    }
    return err;
}

/// Mean over the unmasked cells of each column; fully masked columns are
/// reported as NaN (absent), never as zero.
inline std::vector<double> column_average(const ScalarField& field) {
    std::vector<double> out(static_cast<std::size_t>(field.spec.nx));
    for (int i = 0; i < field.spec.nx; ++i) {
        double sum = 0.0;
        int n = 0;
        for (int j = 0; j < field.spec.ny; ++j) {
            if (!field.masked(i, j)) {
                sum += field.at(i, j);
                ++n;
            }
        }
        out[static_cast<std::size_t>(i)] =
            n ? sum / n : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

struct ErrorStats {
    double max_error{0.0};
    double mean_error{0.0};
    std::int64_t cells{0};
};

/// Max/mean of an error field over unmasked cells, optionally skipping an
/// extra exclusion mask (e.g. the 1-cell dilation around obstacles).
inline ErrorStats error_stats(const ScalarField& err,
                              const std::vector<std::uint8_t>* exclude =
                                  nullptr) {
    ErrorStats s;
    double sum = 0.0;
    for (std::size_t k = 0; k < err.values.size(); ++k) {
        if (err.mask[k]) continue;
        if (exclude && (*exclude)[k]) continue;
        s.max_error = std::max(s.max_error, err.values[k]);
        sum += err.values[k];
        ++s.cells;
    }
    if (s.cells) s.mean_error = sum / static_cast<double>(s.cells);
    return s;
}

}  // namespace stripmc
