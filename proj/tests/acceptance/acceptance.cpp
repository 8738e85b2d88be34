// Acceptance gate. Each criterion prints exactly one [PASS]/[FAIL] line with
// the measured numbers; the process exits nonzero if any criterion fails.
// Criteria marked "desk scale" use N = 2e6 particles.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stripmc/stripmc.hpp"

using namespace stripmc;

namespace {

int failures = 0;
constexpr std::uint64_t kBaseSeed = 424242;
constexpr std::int64_t kDeskN = 2'000'000;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(int id, const char* name, bool ok, double secs, double limit,
            const std::string& detail) {
    const bool in_time = secs < limit;
    if (!(ok && in_time)) ++failures;
    std::printf("[%s] criterion %d (%s): %s [%.1fs, limit %.0fs]\n",
                ok && in_time ? "PASS" : "FAIL", id, name, detail.c_str(),
                secs, limit);
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

DomainConfig square_domain() {
    DomainConfig c;
    c.obstacles.push_back(RectObstacle{{2.0, 0.5}, 0.4, 0.4});
    return c;
}

ScalarField analytic_empty(const GridSpec& g, const DomainConfig& c) {
    ScalarField f(g);
    const double slope =
        (c.rho_right - c.rho_left) / c.strip.length_x;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            f.at(i, j) = c.rho_left + slope * g.cell_center(i, j).x;
    return f;
}

// --- criterion 1: exact kernel identities --------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(kBaseSeed, 1);
    bool exact = true;
    double worst_involution = 0.0, worst_norm = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Vec2 v = unit_from_angle(2.0 * kPi * rng.uniform01());
        const Vec2 back = scatter(v, 0.0);
        const Vec2 keep_p = scatter(v, 1.0);
        const Vec2 keep_m = scatter(v, -1.0);
        exact = exact && back.x == -v.x && back.y == -v.y &&
                keep_p.x == v.x && keep_p.y == v.y && keep_m.x == v.x &&
                keep_m.y == v.y;

        const Vec2 n = unit_from_angle(2.0 * kPi * rng.uniform01());
        const Vec2 r = reflect(reflect(v, n), n);
        worst_involution = std::max(
            worst_involution, std::max(std::fabs(r.x - v.x), std::fabs(r.y - v.y)));
        worst_norm = std::max(worst_norm, std::fabs(norm(reflect(v, n)) - 1.0));
    }
    const bool ok = exact && worst_involution < 1e-12 && worst_norm < 1e-12;
    report(1, "kernel identities", ok, seconds_since(t0), 1.0,
           std::string("backscatter/grazing exact: ") +
               (exact ? "yes" : "NO") + ", reflect involution " +
               fmt(worst_involution) + ", norm drift " + fmt(worst_norm));
}

// --- criterion 2: angular relaxation --------------------------------------

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(kBaseSeed, 2);
    double sum = 0.0;
    constexpr int n = 1'000'000;
    for (int k = 0; k < n; ++k) {
        const Vec2 v{1.0, 0.0};
        sum += dot(v, scatter(v, sample_impact_parameter(rng)));
    }
    const double mean = sum / n;
    const bool ok = std::fabs(mean - (-1.0 / 3.0)) < 0.01;
    report(2, "angular relaxation", ok, seconds_since(t0), 1.0,
           "mean cos(deflection) " + fmt(mean) + " vs -1/3, tol 0.01");
}

// --- criterion 3: diffusion coefficient -----------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    int idx = 0;
    for (const double tm : {1e-2, 1.0}) {
        const KernelParams kernel{tm};
        const double horizon = 100.0 * tm;
        const auto table =
            msd_table(kernel, 400'000, horizon, 32, mix_seed(kBaseSeed, 30 + idx++));
        const double d = fit_diffusion(table, 0.5 * horizon);
        const double rel = d / diffusion_coefficient(kernel) - 1.0;
        ok = ok && std::fabs(rel) < 0.03;
        if (!detail.empty()) detail += ", ";
        detail += "t_m " + fmt(tm) + ": D " + fmt(d) + " (dev " + fmt(rel) + ")";
    }
    report(3, "diffusion coefficient", ok, seconds_since(t0), 60.0,
           detail + "; tol 3%");
}

// --- criterion 4: Laplace oracle on the empty strip ------------------------

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g{200, 50, 4.0, 1.0};
    const DomainConfig c;
    const ScalarField u = solve_laplace(c, g, {});
    double max_err = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            max_err = std::max(max_err,
                               std::fabs(u.at(i, j) -
                                         (1.0 - g.cell_center(i, j).x / 8.0)));
    report(4, "Laplace empty strip", max_err < 1e-6, seconds_since(t0), 10.0,
           "max |field - (1 - x/8)| = " + fmt(max_err) + ", tol 1e-6");
}

// --- criterion 5: flux diagnostics ----------------------------------------

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g{200, 50, 4.0, 1.0};
    const ScalarField u = solve_laplace(square_domain(), g, {});
    double fmin = 1e300, fmax = -1e300, fsum = 0.0;
    for (int i = 1; i < g.nx; ++i) {
        const double f = flux_through(u, i);
        fmin = std::min(fmin, f);
        fmax = std::max(fmax, f);
        fsum += f;
    }
    const double mean = fsum / (g.nx - 1);
    const bool constant = (fmax - fmin) / mean < 0.01;
    const bool reduced = fmax < 0.125;
    report(5, "flux diagnostics", constant && reduced, seconds_since(t0), 30.0,
           "flux " + fmt(mean) + ", column spread " + fmt(fmax - fmin) +
               " (<1%), empty-strip value 0.125");
}

// --- criterion 6: diffusive-limit convergence ------------------------------

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g{200, 50, 4.0, 1.0};
    const DomainConfig c;
    const ScalarField analytic = analytic_empty(g, c);
    std::vector<double> errs;
    std::string detail;
    double bias = 0.0, sigma = 0.0;
    for (const double tm : {2e-1, 1e-1, 2e-2, 1e-2}) {
        const BatchResult batch =
            run_batch(c, KernelParams{tm}, kDeskN, g,
                      mix_seed(kBaseSeed, std::bit_cast<std::uint64_t>(tm)));
        const ScalarField h = normalize(to_sojourn_grid(batch, c), c);
        const ErrorStats s = error_stats(relative_error(h, analytic));
        errs.push_back(s.max_error);
        if (!detail.empty()) detail += ", ";
        detail += "t_m " + fmt(tm) + ": " + fmt(s.max_error);
        if (tm == 1e-2) {
            // decompose the last run's error into the systematic offset of
            // the interior (a normalization-layer effect of the uniform-angle
            // injection) and the per-cell counting noise around it
            double sum = 0.0, sum2 = 0.0;
            int n = 0;
            for (int i = 20; i < g.nx - 20; ++i)
                for (int j = 0; j < g.ny; ++j) {
                    const double rho = analytic.at(i, j);
                    const double r = (h.at(i, j) - rho) / rho;
                    sum += r;
                    sum2 += r * r;
                    ++n;
                }
            bias = sum / n;
            sigma = std::sqrt(sum2 / n - bias * bias);
        }
    }
    const bool monotone = errs[0] > errs[1] && errs[1] > errs[2];
    const bool small = errs[3] < 0.05;
    report(6, "diffusive-limit convergence", monotone && small,
           seconds_since(t0), 600.0,
           "max rel err " + detail +
               (monotone ? " (monotone over {2e-1,1e-1,2e-2})" : " (NOT monotone)") +
               ", need <0.05 at t_m=1e-2; interior bias " + fmt(bias) +
               ", cell noise sigma " + fmt(sigma) +
               " -> expected max ~|bias|+3.7 sigma at this N");
}

// --- criterion 7: obstacle stationary state --------------------------------

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g{200, 50, 4.0, 1.0};
    const DomainConfig c = square_domain();
    const BatchResult batch = run_batch(c, KernelParams{1e-2}, kDeskN, g,
                                        mix_seed(kBaseSeed, 7));
    const ScalarField h = normalize(to_sojourn_grid(batch, c), c);
    const ScalarField oracle = solve_laplace(c, g, {});
    const ScalarField err = relative_error(h, oracle);

    // exclude cells whose center is within 2 cells (Chebyshev) of an
    // obstacle corner
    const double reach = 2.0 * g.cell_size();
    std::vector<std::uint8_t> exclude(g.size(), 0);
    const auto& r = std::get<RectObstacle>(c.obstacles[0]);
    const std::array<Vec2, 4> corners{{{r.min_x(), r.min_y()},
                                       {r.min_x(), r.max_y()},
                                       {r.max_x(), r.min_y()},
                                       {r.max_x(), r.max_y()}}};
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (const Vec2 q : corners) {
                const Vec2 cc = g.cell_center(i, j);
                if (std::max(std::fabs(cc.x - q.x), std::fabs(cc.y - q.y)) <
                    reach)
                    exclude[g.index(i, j)] = 1;
            }
    const ErrorStats away = error_stats(err, &exclude);
    const ErrorStats all = error_stats(err);
    report(7, "obstacle stationary state", away.max_error < 0.10,
           seconds_since(t0), 600.0,
           "max rel err " + fmt(away.max_error) + " away from corners (" +
               std::to_string(away.cells) + " cells, tol 0.10); " +
               fmt(all.max_error) + " everywhere; mean " +
               fmt(away.mean_error) +
               " (max is an order statistic over ~1e4 noisy cells)");
}

// --- criterion 8: crossing fraction ----------------------------------------

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    const DomainConfig c;
    const GridSpec g{200, 50, 4.0, 1.0};
    const BatchResult batch = run_batch(c, KernelParams{2e-2}, kDeskN, g,
                                        mix_seed(kBaseSeed, 8));
    const double frac = crossing_fraction(batch);
    const bool ok = std::fabs(frac / 5.3e-3 - 1.0) < 0.15;
    report(8, "crossing fraction", ok, seconds_since(t0), 300.0,
           fmt(frac) + " of left-injected particles crossed (" +
               std::to_string(batch.crossers().count) + " of " +
               std::to_string(batch.tally(Side::left, Side::left).count +
                              batch.tally(Side::left, Side::right).count) +
               "), target 5.3e-3 +- 15%");
}

// --- criterion 9: residence-time orderings ---------------------------------

struct RowStats {
    double mean;
    double se;
};

RowStats row_of(const ResidenceReport& rep, double value) {
    for (const auto& row : rep.rows)
        if (row.value == value) return {row.mean_residence, row.standard_error};
    std::fprintf(stderr, "sweep row %g missing\n", value);
    std::exit(2);
}

bool sig_less(RowStats a, RowStats b) {  // a < b at >= 2 SE
    return b.mean - a.mean >= 2.0 * std::hypot(a.se, b.se);
}

std::string zs(RowStats a, RowStats b) {  // SE multiples by which a < b
    return fmt((b.mean - a.mean) / std::hypot(a.se, b.se));
}

void criterion_9() {
    const auto t0 = std::chrono::steady_clock::now();
    const KernelParams kernel{2e-2};
    const GridSpec g{200, 50, 4.0, 1.0};

    SweepSpec thin = *make_preset("sweep-height-thin").sweep;
    thin.values = {0.2, 0.5, 0.8};
    const ResidenceReport ra =
        run_sweep(thin, kernel, kDeskN, g, mix_seed(kBaseSeed, 91));
    const RowStats a2 = row_of(ra, 0.2), a5 = row_of(ra, 0.5),
                   a8 = row_of(ra, 0.8);
    const bool part_a = sig_less(a2, a5) && sig_less(a5, a8);

    SweepSpec wide = *make_preset("sweep-height-wide").sweep;
    wide.values = {0.3, 0.5, 0.9};
    const ResidenceReport rb =
        run_sweep(wide, kernel, kDeskN, g, mix_seed(kBaseSeed, 92));
    const RowStats base_b{rb.baseline.mean_residence,
                          rb.baseline.standard_error};
    const bool part_b = sig_less(row_of(rb, 0.3), base_b) &&
                        sig_less(row_of(rb, 0.5), base_b) &&
                        sig_less(base_b, row_of(rb, 0.9));

    SweepSpec center = *make_preset("sweep-center-square").sweep;
    center.values = {0.8, 1.6, 2.0, 2.4, 3.2};
    const ResidenceReport rc =
        run_sweep(center, kernel, kDeskN, g, mix_seed(kBaseSeed, 93));
    const RowStats base_c{rc.baseline.mean_residence,
                          rc.baseline.standard_error};
    const RowStats c08 = row_of(rc, 0.8), c16 = row_of(rc, 1.6),
                   c20 = row_of(rc, 2.0), c24 = row_of(rc, 2.4),
                   c32 = row_of(rc, 3.2);
    const bool part_c = sig_less(c20, c08) && sig_less(c20, c32) &&
                        sig_less(c16, base_c) && sig_less(c20, base_c) &&
                        sig_less(c24, base_c);

    std::ostringstream d;
    d << "(a) thin heights " << fmt(a2.mean) << " < " << fmt(a5.mean) << " < "
      << fmt(a8.mean) << " [z " << zs(a2, a5) << "/" << zs(a5, a8) << "]"
      << (part_a ? " ok" : " VIOLATED") << "; (b) w=0.8 heights 0.3/0.5 "
      << fmt(row_of(rb, 0.3).mean) << "/" << fmt(row_of(rb, 0.5).mean)
      << " below, 0.9 " << fmt(row_of(rb, 0.9).mean) << " above baseline "
      << fmt(base_b.mean) << " [z " << zs(row_of(rb, 0.3), base_b) << "/"
      << zs(row_of(rb, 0.5), base_b) << "/" << zs(base_b, row_of(rb, 0.9))
      << "]" << (part_b ? " ok" : " VIOLATED") << "; (c) center 2.0 "
      << fmt(c20.mean) << " below 0.8/3.2 " << fmt(c08.mean) << "/"
      << fmt(c32.mean) << " and {1.6,2.0,2.4} below baseline "
      << fmt(base_c.mean) << " [z " << zs(c20, c08) << "/" << zs(c20, c32)
      << "/" << zs(c16, base_c) << "/" << zs(c20, base_c) << "/"
      << zs(c24, base_c) << "]" << (part_c ? " ok" : " VIOLATED")
      << "; all need >= 2 SE";
    report(9, "residence orderings", part_a && part_b && part_c,
           seconds_since(t0), 3600.0, d.str());
}

// --- criterion 10: region decomposition ------------------------------------

void criterion_10() {
    const auto t0 = std::chrono::steady_clock::now();
    const KernelParams kernel{2e-2};
    const GridSpec g{200, 50, 4.0, 1.0};
    const DomainConfig sq = square_domain();

    const BatchResult with = run_batch(sq, kernel, kDeskN, g,
                                       mix_seed(kBaseSeed, 101));
    BatchOptions opt;
    opt.transport.regions = default_regions(sq);  // same split for the empty run
    const BatchResult without = run_batch(DomainConfig{}, kernel, kDeskN, g,
                                          mix_seed(kBaseSeed, 102), opt);
    const auto tw = region_times(with);
    const auto te = region_times(without);
    const bool regions_ok = tw[1] < te[1] && tw[0] > te[0] && tw[2] > te[2];

    const ScalarField map_w = local_residence_map(with, sq);
    const ScalarField map_e = local_residence_map(without, DomainConfig{});
    std::int64_t cells = 0, violations = 0;
    double worst = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            if (map_w.masked(i, j) || map_e.masked(i, j)) continue;
            const std::size_t k = g.index(i, j);
            const double se_w =
                map_w.at(i, j) /
                std::sqrt(static_cast<double>(with.crosser_visits[k]));
            const double se_e =
                map_e.at(i, j) /
                std::sqrt(static_cast<double>(without.crosser_visits[k]));
            const double deficit =
                map_e.at(i, j) - map_w.at(i, j) - 2.0 * (se_w + se_e);
            ++cells;
            if (deficit > 0.0) {
                ++violations;
                worst = std::max(worst, deficit);
            }
        }
    const bool map_ok = violations == 0;

    std::ostringstream d;
    d << "t_C " << fmt(tw[1]) << " < empty " << fmt(te[1]) << ", t_L/t_R "
      << fmt(tw[0]) << "/" << fmt(tw[2]) << " > empty " << fmt(te[0]) << "/"
      << fmt(te[2]) << (regions_ok ? " ok" : " VIOLATED") << "; local map >= empty on "
      << cells << " shared cells with " << violations << " violations";
    if (violations > 0) d << " (worst deficit " << fmt(worst) << ")";
    report(10, "region decomposition", regions_ok && map_ok,
           seconds_since(t0), 900.0, d.str());
}

// --- criterion 11: determinism across worker counts ------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void criterion_11() {
    const auto t0 = std::chrono::steady_clock::now();
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "stripmc_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = dir / "c11.json";
    {
        std::ofstream os(config);
        os << R"({"mode": "stationary", "kernel": {"mean_flight_time": 0.05},
                  "grid": {"nx": 80, "ny": 20}, "n_particles": 100000,
                  "seed": 31415})";
    }
    const std::string base = std::string(STRIPMC_CLI_PATH) + " run " +
                             config.string();
    const std::string quiet = " > /dev/null 2>&1";
    const int rc1 = std::system(
        (base + " --workers 1 --output " + (dir / "w1").string() + quiet)
            .c_str());
    const int rc4 = std::system(
        (base + " --workers 4 --output " + (dir / "w4").string() + quiet)
            .c_str());
    bool ok = rc1 == 0 && rc4 == 0;
    std::string mismatch;
    for (const char* name :
         {"density.csv", "oracle.csv", "relative_error.csv", "summary.txt"}) {
        if (slurp(dir / "w1" / name) != slurp(dir / "w4" / name)) {
            ok = false;
            mismatch += std::string(" ") + name;
        }
    }
    report(11, "worker determinism", ok, seconds_since(t0), 60.0,
           ok ? "1 vs 4 workers: all four artifacts byte-identical"
              : "exit codes " + std::to_string(rc1) + "/" +
                    std::to_string(rc4) + ", mismatched:" + mismatch);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
