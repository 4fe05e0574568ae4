#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dicke/cache.hpp"
#include "dicke/eigensolver.hpp"
#include "dicke/hilbert.hpp"
#include "dicke/io.hpp"
#include "dicke/parallel.hpp"

namespace dicke::phase {

/// Relative gap between the i-th levels of the two parity sectors,
/// |(E_i^+ - E_i^-) / E_i^+|, paired by ascending index within each sector.
struct DoubletGap {
    int index = 0;
    double e_plus = 0.0;
    double e_minus = 0.0;
    double mean_energy = 0.0;
    double delta = 0.0;
    // True when |E_i^+| < 1e-12 omega0 forced the absolute-difference
    // fallback |E_i^+ - E_i^-| / omega0 (the relative form blows up at
    // zero crossings).
    bool abs_fallback = false;
};

inline std::vector<DoubletGap> doublet_gaps(const eig::Spectrum& plus, const eig::Spectrum& minus,
                                            const ModelParams& p) {
    if (plus.sector != Sector::plus || minus.sector != Sector::minus)
        throw std::invalid_argument("doublet_gaps: sector mismatch");
    if (!plus.params_fingerprint.empty() && !minus.params_fingerprint.empty() &&
        plus.params_fingerprint != minus.params_fingerprint)
        throw std::invalid_argument("doublet_gaps: fingerprint mismatch");

    const auto n = std::min(plus.size(), minus.size());
    std::vector<DoubletGap> gaps(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        DoubletGap& g = gaps[static_cast<std::size_t>(i)];
        g.index = static_cast<int>(i);
        g.e_plus = plus.eigenvalues[i];
        g.e_minus = minus.eigenvalues[i];
        g.mean_energy = 0.5 * (g.e_plus + g.e_minus);
        if (std::abs(g.e_plus) < 1e-12 * p.omega0) {
            g.delta = std::abs(g.e_plus - g.e_minus) / p.omega0;
            g.abs_fallback = true;
        } else {
            g.delta = std::abs((g.e_plus - g.e_minus) / g.e_plus);
        }
    }
    return gaps;
}

/// Indices beyond the first threshold crossing (plus a buffer) whose gap
/// falls back below the threshold. Signals index-pairing misalignment
/// between the sectors; reported, never corrected.
inline std::vector<int> pairing_misalignments(const std::vector<DoubletGap>& gaps, double k_err,
                                              int buffer = 10) {
    std::vector<int> out;
    std::ptrdiff_t first = -1;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (first < 0) {
            if (gaps[i].delta > k_err) first = static_cast<std::ptrdiff_t>(i);
            continue;
        }
        if (static_cast<std::ptrdiff_t>(i) > first + buffer && gaps[i].delta < k_err)
            out.push_back(gaps[i].index);
    }
    return out;
}

/// Initial photon cutoff guess: superradiant photon occupation scales like
/// 2J lambda^2 / omega^2; four times that, floored at 64.
inline int heuristic_cutoff(const ModelParams& p) {
    const double occ = 4.0 * p.n_atoms * p.lambda * p.lambda / (p.omega * p.omega);
    return std::max(64, static_cast<int>(std::ceil(occ)));
}

namespace detail {

inline eig::Spectrum sector_values(const ModelParams& p, Sector sector,
                                   const cache::SpectrumCache* cache) {
    auto solve = [&]() {
        const auto block = hilbert::build_hamiltonian_banded(p, sector);
        eig::Spectrum s;
        s.sector = sector;
        s.params_fingerprint = p.fingerprint();
        s.eigenvalues = eig::eigenvalues_banded(block.ab, block.kd, s.params_fingerprint);
        return s;
    };
    if (cache) return cache->get_or_compute(p, sector, cache::solver_tag_values_banded, solve);
    return solve();
}

inline Eigen::VectorXd merged_sector_values(const ModelParams& p, const cache::SpectrumCache* cache,
                                            int threads) {
    eig::Spectrum plus, minus;
    par::parallel_index(2, threads, [&](std::size_t i) {
        if (i == 0)
            plus = sector_values(p, Sector::plus, cache);
        else
            minus = sector_values(p, Sector::minus, cache);
    });
    Eigen::VectorXd merged(plus.size() + minus.size());
    std::merge(plus.eigenvalues.begin(), plus.eigenvalues.end(), minus.eigenvalues.begin(),
               minus.eigenvalues.end(), merged.begin());
    return merged;
}

} // namespace detail

/// Smallest tested cutoff whose spectrum below the energy window is stable
/// (every eigenvalue moves less than `tol`) against a fractional cutoff
/// increase. Doubles the cutoff from the heuristic until satisfied.
inline int cutoff_convergence(const ModelParams& params, double energy_window_top_over_j,
                              double growth = 0.2, double tol = 1e-8,
                              const cache::SpectrumCache* cache = nullptr, int threads = 1) {
    params.validate();
    if (!(growth > 0.0)) throw std::invalid_argument("cutoff_convergence: growth must be > 0");
    int n = heuristic_cutoff(params);
    if (!(tol < std::numeric_limits<double>::infinity())) return n;

    const double window_top = energy_window_top_over_j * params.j();
    for (;;) {
        const int n_grown = static_cast<int>(std::ceil(n * (1.0 + growth)));
        ModelParams p_base = params, p_grown = params;
        p_base.n_max = n;
        p_grown.n_max = n_grown;
        if (build_basis(p_grown, Sector::plus).size() > params.dim_limit)
            throw ConvergenceError("cutoff_convergence: dimension cap " +
                                   std::to_string(params.dim_limit) +
                                   " reached before the window stabilized (n_max=" +
                                   std::to_string(n_grown) + ")");

        const Eigen::VectorXd base = detail::merged_sector_values(p_base, cache, threads);
        const Eigen::VectorXd grown = detail::merged_sector_values(p_grown, cache, threads);

        Eigen::Index count = 0;
        while (count < base.size() && base[count] <= window_top) ++count;
        count = std::max<Eigen::Index>(count, 1); // always watch at least the ground state
        double max_move = 0.0;
        for (Eigen::Index i = 0; i < count; ++i)
            max_move = std::max(max_move, std::abs(base[i] - grown[i]));
        if (max_move < tol) return n;
        n *= 2;
    }
}

struct CriticalEnergy {
    bool applicable = false; // false below the ground-state critical coupling
    double ec_over_j = std::numeric_limits<double>::quiet_NaN();
    int pair_index = -1;
};

/// Mean pair energy over J at the first doublet index whose relative gap
/// exceeds k_err. Requires params.n_max to be set (see cutoff_convergence).
inline CriticalEnergy critical_energy(const ModelParams& p, double k_err,
                                      const cache::SpectrumCache* cache = nullptr, int threads = 1) {
    p.validate();
    if (!(k_err > 0.0)) throw std::invalid_argument("critical_energy: k_err must be > 0");
    if (p.lambda <= p.lambda_critical()) return CriticalEnergy{};

    eig::Spectrum plus, minus;
    par::parallel_index(2, threads, [&](std::size_t i) {
        if (i == 0)
            plus = detail::sector_values(p, Sector::plus, cache);
        else
            minus = detail::sector_values(p, Sector::minus, cache);
    });
    const auto gaps = doublet_gaps(plus, minus, p);
    for (const auto& g : gaps)
        if (g.delta > k_err) return CriticalEnergy{true, g.mean_energy / p.j(), g.index};
    throw ConvergenceError("critical_energy: no doublet gap above k_err=" + io::format_double(k_err) +
                           " at lambda=" + io::format_double(p.lambda) +
                           "; photon cutoff n_max=" + std::to_string(p.n_max) + " too small");
}

struct CriticalPoint {
    double lambda = 0.0;
    double ec_over_j = 0.0;
    int pair_index = -1;
};

struct CriticalLine {
    int n_atoms = 0;
    double k_err = 0.0;
    std::vector<CriticalPoint> points; // only lambdas above the critical coupling
};

/// Linear critical-line fit E_c/J = A + B lambda over the line's points.
struct ScalingFit {
    int n_atoms = 0;
    double intercept = 0.0; // A_N
    double slope = 0.0;     // B_N
    double residual = 0.0;  // RMS of the fit
};

inline ScalingFit fit_critical_line(const CriticalLine& line, double lambda_critical) {
    const auto& pts = line.points;
    if (pts.size() < 3) throw std::invalid_argument("fit_critical_line: need at least 3 points");
    for (const auto& pt : pts)
        if (!(pt.lambda > lambda_critical))
            throw std::invalid_argument("fit_critical_line: point at lambda <= lambda_c");

    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : pts) {
        sx += pt.lambda;
        sy += pt.ec_over_j;
        sxx += pt.lambda * pt.lambda;
        sxy += pt.lambda * pt.ec_over_j;
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-12 * std::max(1.0, n * sxx))
        throw std::invalid_argument("fit_critical_line: rank deficient (all lambdas equal)");
    ScalingFit fit;
    fit.n_atoms = line.n_atoms;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0;
    for (const auto& pt : pts) {
        const double r = pt.ec_over_j - (fit.intercept + fit.slope * pt.lambda);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

/// c(N) = c_inf + a N^(-alpha), least squares. With the asymptote supplied
/// only (a, alpha) are fitted. Implemented by variable projection: alpha is
/// scanned then refined by golden section, the linear subproblem is closed
/// form, so there is no initial-guess sensitivity.
struct PowerLawFit {
    double asymptote = 0.0;
    double amplitude = 0.0;
    double exponent = 0.0;
    Eigen::MatrixXd covariance; // Gauss-Newton estimate at the optimum, free parameters only
    bool degenerate = false;    // constant input series
};

namespace detail {

struct ProjectedFit {
    double sse;
    double asymptote;
    double amplitude;
};

inline ProjectedFit power_law_linear_subproblem(const std::vector<std::pair<double, double>>& pts,
                                                double alpha, std::optional<double> fixed_asymptote) {
    const std::size_t n = pts.size();
    double s1 = 0, sb = 0, sbb = 0, sy = 0, sby = 0;
    for (const auto& [N, c] : pts) {
        const double b = std::pow(N, -alpha);
        s1 += 1.0;
        sb += b;
        sbb += b * b;
        sy += c;
        sby += b * c;
    }
    double c_inf, a;
    if (fixed_asymptote) {
        c_inf = *fixed_asymptote;
        a = (sby - c_inf * sb) / sbb;
    } else {
        const double det = s1 * sbb - sb * sb;
        if (std::abs(det) < 1e-300) return ProjectedFit{std::numeric_limits<double>::infinity(), 0, 0};
        a = (s1 * sby - sb * sy) / det;
        c_inf = (sy - a * sb) / s1;
    }
    double sse = 0;
    for (const auto& [N, c] : pts) {
        const double r = c - c_inf - a * std::pow(N, -alpha);
        sse += r * r;
    }
    (void)n;
    return ProjectedFit{sse, c_inf, a};
}

template <class F>
double golden_min(F f, double a, double b, double xtol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& series,
                                 std::optional<double> asymptote_fixed = std::nullopt) {
    if (series.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
    for (std::size_t i = 0; i + 1 < series.size(); ++i)
        if (!(series[i].first < series[i + 1].first))
            throw std::invalid_argument("fit_power_law: N values must be strictly increasing");
    for (const auto& [N, c] : series) {
        (void)c;
        if (!(N > 0.0)) throw std::invalid_argument("fit_power_law: N values must be positive");
    }

    double cmin = series.front().second, cmax = cmin;
    for (const auto& [N, c] : series) {
        (void)N;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    if (cmax - cmin == 0.0) {
        PowerLawFit flat;
        flat.asymptote = asymptote_fixed.value_or(cmin);
        flat.amplitude = 0.0;
        flat.exponent = 0.0;
        flat.degenerate = true;
        flat.covariance = Eigen::MatrixXd::Zero(asymptote_fixed ? 2 : 3, asymptote_fixed ? 2 : 3);
        return flat;
    }

    constexpr double alpha_lo = 1e-2, alpha_hi = 8.0;
    const int grid_points = 240;
    double best_alpha = alpha_lo;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= grid_points; ++k) {
        const double alpha =
            alpha_lo * std::pow(alpha_hi / alpha_lo, static_cast<double>(k) / grid_points);
        const double sse = detail::power_law_linear_subproblem(series, alpha, asymptote_fixed).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    if (!(best_sse < std::numeric_limits<double>::infinity()))
        throw ConvergenceError("fit_power_law: no usable exponent in the scan range [" +
                               io::format_double(alpha_lo) + ", " + io::format_double(alpha_hi) +
                               "]; best sse never finite");

    const double lo = best_alpha / std::pow(alpha_hi / alpha_lo, 1.0 / grid_points);
    const double hi = best_alpha * std::pow(alpha_hi / alpha_lo, 1.0 / grid_points);
    const double alpha = detail::golden_min(
        [&](double a) { return detail::power_law_linear_subproblem(series, a, asymptote_fixed).sse; },
        std::max(alpha_lo, lo), std::min(alpha_hi, hi), 1e-12);
    const auto solved = detail::power_law_linear_subproblem(series, alpha, asymptote_fixed);

    // An optimum pinned to the scan boundary means the model never turned
    // over inside the admissible range: report rather than extrapolate.
    if (alpha >= alpha_hi * 0.999)
        throw ConvergenceError("fit_power_law: exponent ran into the upper scan bound " +
                               io::format_double(alpha_hi) + " (best sse=" +
                               io::format_double(solved.sse) + "); data inconsistent with a power law");

    PowerLawFit fit;
    fit.asymptote = solved.asymptote;
    fit.amplitude = solved.amplitude;
    fit.exponent = alpha;

    // Gauss-Newton covariance s^2 (J'J)^-1 over the free parameters.
    const int k_free = asymptote_fixed ? 2 : 3;
    const auto n_pts = static_cast<int>(series.size());
    Eigen::MatrixXd jac(n_pts, k_free);
    for (int r = 0; r < n_pts; ++r) {
        const double N = series[static_cast<std::size_t>(r)].first;
        const double b = std::pow(N, -alpha);
        int c = 0;
        if (!asymptote_fixed) jac(r, c++) = 1.0;
        jac(r, c++) = b;
        jac(r, c) = -fit.amplitude * std::log(N) * b;
    }
    const double dof = std::max(1, n_pts - k_free);
    const double s2 = solved.sse / dof;
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    fit.covariance = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
    return fit;
}

struct ScanOptions {
    double window_top_over_j = 1.0; // map rows kept up to this pair energy
    bool verify_cutoff = true;      // run the doubling search at the largest lambda
    double cutoff_growth = 0.2;
    double cutoff_tol = 1e-8;
    std::optional<int> n_max_override; // fixed cutoff for every lambda
    int threads = 1;
    const cache::SpectrumCache* cache = nullptr;
};

struct LambdaScanRow {
    double lambda = 0.0;
    int n_max = 0;
    bool normal_phase = false;
    std::optional<CriticalPoint> critical;
    std::vector<DoubletGap> gaps_in_window;
    std::vector<int> misaligned;
};

struct PhaseScan {
    ModelParams template_params;
    double k_err = 0.0;
    std::vector<LambdaScanRow> rows;
    CriticalLine line;
};

/// Doublet-gap map plus the critical line over a coupling grid. Lambda
/// points are independent jobs; the output is identical for any worker
/// count because rows are assembled by grid index.
inline PhaseScan scan_phase_diagram(const ModelParams& tmpl, const std::vector<double>& lambda_grid,
                                    double k_err, const ScanOptions& opt = {}) {
    tmpl.validate();
    if (lambda_grid.empty()) throw std::invalid_argument("scan_phase_diagram: empty lambda grid");
    if (!(k_err > 0.0)) throw std::invalid_argument("scan_phase_diagram: k_err must be > 0");

    // Per-lambda cutoff: heuristic, optionally rescaled by a convergence
    // search at the most demanding (largest) lambda. The demand grows
    // monotonically with lambda, so one verification bounds the grid.
    const double lambda_max = *std::max_element(lambda_grid.begin(), lambda_grid.end());
    double cutoff_scale = 1.0;
    if (!opt.n_max_override && opt.verify_cutoff) {
        ModelParams p_top = tmpl;
        p_top.lambda = lambda_max;
        const int converged = cutoff_convergence(p_top, opt.window_top_over_j, opt.cutoff_growth,
                                                 opt.cutoff_tol, opt.cache, opt.threads);
        cutoff_scale =
            std::max(1.0, static_cast<double>(converged) / heuristic_cutoff(p_top));
    }
    auto cutoff_for = [&](double lambda) {
        if (opt.n_max_override) return *opt.n_max_override;
        ModelParams p = tmpl;
        p.lambda = lambda;
        return static_cast<int>(std::ceil(heuristic_cutoff(p) * cutoff_scale));
    };

    struct SectorJob {
        std::size_t grid_index;
        Sector sector;
    };
    std::vector<SectorJob> jobs;
    jobs.reserve(2 * lambda_grid.size());
    for (std::size_t gi = 0; gi < lambda_grid.size(); ++gi)
        for (Sector s : {Sector::plus, Sector::minus}) jobs.push_back({gi, s});

    std::vector<eig::Spectrum> slots(jobs.size());
    par::parallel_index(jobs.size(), opt.threads, [&](std::size_t k) {
        ModelParams p = tmpl;
        p.lambda = lambda_grid[jobs[k].grid_index];
        p.n_max = cutoff_for(p.lambda);
        slots[k] = detail::sector_values(p, jobs[k].sector, opt.cache);
    });

    PhaseScan scan;
    scan.template_params = tmpl;
    scan.k_err = k_err;
    scan.line.n_atoms = tmpl.n_atoms;
    scan.line.k_err = k_err;
    const double lambda_c = tmpl.lambda_critical();
    const double j = tmpl.j();

    for (std::size_t gi = 0; gi < lambda_grid.size(); ++gi) {
        ModelParams p = tmpl;
        p.lambda = lambda_grid[gi];
        p.n_max = cutoff_for(p.lambda);

        LambdaScanRow row;
        row.lambda = p.lambda;
        row.n_max = p.n_max;
        row.normal_phase = p.lambda <= lambda_c;
        const auto gaps = doublet_gaps(slots[2 * gi], slots[2 * gi + 1], p);
        for (const auto& g : gaps)
            if (g.mean_energy / j <= opt.window_top_over_j) row.gaps_in_window.push_back(g);
        row.misaligned = pairing_misalignments(gaps, k_err);
        if (!row.normal_phase) {
            for (const auto& g : gaps) {
                if (g.delta > k_err) {
                    row.critical = CriticalPoint{p.lambda, g.mean_energy / j, g.index};
                    break;
                }
            }
            if (!row.critical)
                throw ConvergenceError("scan_phase_diagram: no doublet gap above k_err at lambda=" +
                                       io::format_double(p.lambda) + " (n_max=" +
                                       std::to_string(p.n_max) + " too small)");
            scan.line.points.push_back(*row.critical);
        }
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

inline void write_map_csv(std::ostream& out, const PhaseScan& scan) {
    io::csv_row(out, "lambda", "pair_index", "pair_energy_over_J", "delta_E", "log10_delta_E");
    for (const auto& row : scan.rows)
        for (const auto& g : row.gaps_in_window)
            io::csv_row(out, row.lambda, g.index, g.mean_energy / scan.template_params.j(), g.delta,
                        std::log10(g.delta));
}

inline void write_line_csv(std::ostream& out, const CriticalLine& line) {
    io::csv_row(out, "lambda", "Ec_over_J");
    for (const auto& pt : line.points) io::csv_row(out, pt.lambda, pt.ec_over_j);
}

inline void write_scaling_csv(std::ostream& out, const std::vector<ScalingFit>& fits) {
    io::csv_row(out, "N", "A_N", "B_N", "residual");
    for (const auto& f : fits) io::csv_row(out, f.n_atoms, f.intercept, f.slope, f.residual);
}

} // namespace dicke::phase
