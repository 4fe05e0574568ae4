#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dicke/contour.hpp"
#include "dicke/errors.hpp"
#include "dicke/io.hpp"
#include "dicke/model.hpp"

namespace dicke::meanfield {

struct CoherentParams {
    double mu = 0.0; // atomic coherent-state parameter
    double nu = 0.0; // photonic coherent-state parameter
};

/// Variational energy of the product coherent state |mu> x |nu>:
///   omega0 J (mu^2-1)/(mu^2+1) + omega nu^2 + lambda sqrt(2J) 4 mu nu / (mu^2+1)
inline double e_var(double mu, double nu, double lambda, const ModelParams& p) {
    if (!std::isfinite(mu) || !std::isfinite(nu) || !std::isfinite(lambda))
        throw std::invalid_argument("e_var: non-finite input");
    const double j = p.j();
    const double mu2p1 = mu * mu + 1.0;
    return p.omega0 * j * (mu * mu - 1.0) / mu2p1 + p.omega * nu * nu +
           lambda * std::sqrt(2.0 * j) * 4.0 * mu * nu / mu2p1;
}

struct Minimum {
    CoherentParams point;
    double energy = 0.0;
};

/// The two symmetric minima of the variational surface (or the single
/// origin minimum below the critical coupling). branch_plus has mu > 0,
/// hence nu < 0 for lambda > 0.
struct MinimumPair {
    Minimum branch_plus;
    Minimum branch_minus;
    bool degenerate = false; // two symmetry-broken minima present
    bool critical = false;   // lambda exactly at the critical coupling
};

namespace detail {

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

// Photon parameter minimizing the surface at fixed mu.
inline double nu_star(double mu, double lambda, const ModelParams& p) {
    return -2.0 * lambda * std::sqrt(2.0 * p.j()) * mu / (p.omega * (mu * mu + 1.0));
}

} // namespace detail

inline MinimumPair minimize_surface(double lambda, const ModelParams& p) {
    p.validate();
    if (!(lambda >= 0.0)) throw std::invalid_argument("minimize_surface: lambda must be >= 0");
    const double lambda_c = p.lambda_critical();
    const double j = p.j();

    if (lambda <= lambda_c) {
        const Minimum origin{CoherentParams{0.0, 0.0}, -p.omega0 * j};
        return MinimumPair{origin, origin, false, lambda == lambda_c};
    }

    // Eliminate nu analytically, then search the reduced profile in mu.
    // Its minimizer always satisfies mu^2 < 1, so (0, 1) brackets it.
    auto reduced = [&](double mu) {
        const double mu2p1 = mu * mu + 1.0;
        return p.omega0 * j * (mu * mu - 1.0) / mu2p1 -
               8.0 * lambda * lambda * j * mu * mu / (p.omega * mu2p1 * mu2p1);
    };
    const double mu_star = detail::golden_min(reduced, 0.0, 1.0, 1e-12);
    const double nu_star = detail::nu_star(mu_star, lambda, p);
    const double energy = e_var(mu_star, nu_star, lambda, p);

    MinimumPair pair;
    pair.branch_plus = Minimum{CoherentParams{mu_star, nu_star}, energy};
    pair.branch_minus = Minimum{CoherentParams{-mu_star, -nu_star}, energy};
    pair.degenerate = true;
    return pair;
}

/// Energy of the pre-quench minimum evaluated under the post-quench
/// Hamiltonian, as an explicit function of the two couplings.
inline double quench_energy(double lambda_i, double lambda_f, const ModelParams& p) {
    p.validate();
    const double lambda_c = p.lambda_critical();
    if (!(lambda_i > lambda_c))
        throw std::domain_error("quench_energy: lambda_i=" + io::format_double(lambda_i) +
                                " must exceed lambda_c=" + io::format_double(lambda_c) +
                                " (the formula assumes a symmetry-broken initial minimum)");
    const double j = p.j();
    const double li2 = lambda_i * lambda_i;
    const double lc2 = lambda_c * lambda_c;
    const double quartic_gap = (li2 * li2 - lc2 * lc2) / (p.omega * li2);
    return -p.omega0 * j * (lc2 / li2) + 2.0 * j * quartic_gap -
           4.0 * j * (lambda_f / lambda_i) * quartic_gap;
}

enum class LevelSetClass {
    point_minimum, // sublevel set below the critical energy empty: normal phase
    two_wells,     // two disjoint wells: symmetry-breaking phase
    other
};

struct SurfaceGrid {
    double lambda = 0.0;
    Eigen::VectorXd mu_axis;
    Eigen::VectorXd nu_axis;
    Eigen::MatrixXd values_over_j; // (mu index, nu index)
    int components_below_critical = 0;
    LevelSetClass classification = LevelSetClass::point_minimum;
};

inline Eigen::VectorXd linspace(double lo, double hi, int count) {
    Eigen::VectorXd v(count);
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    return v;
}

inline SurfaceGrid surface_grid(double lambda, const ModelParams& p,
                                std::pair<double, double> mu_range,
                                std::pair<double, double> nu_range, int resolution = 512) {
    p.validate();
    if (resolution < 2) throw std::invalid_argument("surface_grid: resolution must be >= 2");
    SurfaceGrid g;
    g.lambda = lambda;
    g.mu_axis = linspace(mu_range.first, mu_range.second, resolution);
    g.nu_axis = linspace(nu_range.first, nu_range.second, resolution);
    g.values_over_j.resize(resolution, resolution);
    const double j = p.j();
    for (int a = 0; a < resolution; ++a)
        for (int b = 0; b < resolution; ++b)
            g.values_over_j(a, b) = e_var(g.mu_axis[a], g.nu_axis[b], lambda, p) / j;
    g.components_below_critical = contour::count_components_below(g.values_over_j, -1.0);
    g.classification = g.components_below_critical == 0 ? LevelSetClass::point_minimum
                       : g.components_below_critical == 2 ? LevelSetClass::two_wells
                                                          : LevelSetClass::other;
    return g;
}

struct QuenchEnergyGrid {
    Eigen::VectorXd lambda_i_axis;
    Eigen::VectorXd lambda_f_axis;
    Eigen::MatrixXd values_over_j; // (lambda_i index, lambda_f index)
    std::vector<contour::Polyline> critical_contour; // E/J = -1 polylines
};

inline QuenchEnergyGrid quench_energy_grid(std::pair<double, double> lambda_i_range,
                                           std::pair<double, double> lambda_f_range, int resolution,
                                           const ModelParams& p) {
    p.validate();
    if (resolution < 2) throw std::invalid_argument("quench_energy_grid: resolution must be >= 2");
    if (!(lambda_i_range.first > p.lambda_critical()))
        throw std::domain_error("quench_energy_grid: lambda_i range must stay above lambda_c");
    QuenchEnergyGrid g;
    g.lambda_i_axis = linspace(lambda_i_range.first, lambda_i_range.second, resolution);
    g.lambda_f_axis = linspace(lambda_f_range.first, lambda_f_range.second, resolution);
    g.values_over_j.resize(resolution, resolution);
    const double j = p.j();
    for (int a = 0; a < resolution; ++a)
        for (int b = 0; b < resolution; ++b)
            g.values_over_j(a, b) = quench_energy(g.lambda_i_axis[a], g.lambda_f_axis[b], p) / j;
    g.critical_contour = contour::extract_isolines(g.values_over_j, g.lambda_i_axis, g.lambda_f_axis, -1.0);
    return g;
}

inline constexpr double coherent_tail_tolerance = 1e-12;

/// Probability carried by photon numbers above the cutoff for a coherent
/// state with mean occupation nu^2.
inline double coherent_photon_tail(double nu, int n_max) {
    const double mean = nu * nu;
    if (mean == 0.0) return 0.0;
    // first omitted Poisson weight, then forward recursion
    double log_term = (n_max + 1) * std::log(mean) - mean - std::lgamma(static_cast<double>(n_max) + 2.0);
    double term = std::exp(log_term);
    double tail = 0.0;
    for (int n = n_max + 1; n < n_max + 100000; ++n) {
        tail += term;
        term *= mean / (n + 1);
        if (term < tail * 1e-18 + 1e-320) break;
    }
    return tail;
}

enum class TailPolicy {
    enforce,     // reject cutoffs whose photonic tail exceeds the tolerance
    renormalize  // accept the truncation and rescale to unit norm
};

/// Coefficient vector of |mu> x |nu> on the canonical full basis:
///   c(n, m) = binom(2J, m+J)^(1/2) mu^(m+J) (1+mu^2)^(-J) e^(-nu^2/2) nu^n / sqrt(n!)
/// evaluated in log space so large cutoffs cannot overflow.
inline Eigen::VectorXd coherent_state_vector(double mu, double nu, const ModelParams& p,
                                             TailPolicy policy = TailPolicy::enforce) {
    p.validate();
    if (!std::isfinite(mu) || !std::isfinite(nu))
        throw std::invalid_argument("coherent_state_vector: non-finite parameters");

    const double tail = coherent_photon_tail(nu, p.n_max);
    if (policy == TailPolicy::enforce && !(tail < coherent_tail_tolerance))
        throw ConvergenceError("coherent_state_vector: photonic tail " + io::format_double(tail) +
                               " beyond n_max=" + std::to_string(p.n_max) +
                               " exceeds " + io::format_double(coherent_tail_tolerance) +
                               "; increase the cutoff");

    const int tj = p.twice_j();
    const double j = p.j();
    const double log_mu = mu == 0.0 ? 0.0 : std::log(std::abs(mu));
    const double log_nu = nu == 0.0 ? 0.0 : std::log(std::abs(nu));
    const double log_atom_norm = -j * std::log1p(mu * mu);

    std::vector<double> atom(static_cast<std::size_t>(tj) + 1);
    for (int k = 0; k <= tj; ++k) {
        if (mu == 0.0 && k > 0) {
            atom[static_cast<std::size_t>(k)] = 0.0;
            continue;
        }
        const double log_binom = std::lgamma(tj + 1.0) - std::lgamma(k + 1.0) - std::lgamma(tj - k + 1.0);
        const double sign = (mu < 0.0 && k % 2 == 1) ? -1.0 : 1.0;
        atom[static_cast<std::size_t>(k)] = sign * std::exp(0.5 * log_binom + k * log_mu + log_atom_norm);
    }

    std::vector<double> photon(static_cast<std::size_t>(p.n_max) + 1);
    for (int n = 0; n <= p.n_max; ++n) {
        if (nu == 0.0 && n > 0) {
            photon[static_cast<std::size_t>(n)] = 0.0;
            continue;
        }
        const double sign = (nu < 0.0 && n % 2 == 1) ? -1.0 : 1.0;
        photon[static_cast<std::size_t>(n)] =
            sign * std::exp(n * log_nu - 0.5 * std::lgamma(n + 1.0) - 0.5 * nu * nu);
    }

    Eigen::VectorXd c(static_cast<Eigen::Index>(p.full_dimension()));
    for (int n = 0; n <= p.n_max; ++n)
        for (int k = 0; k <= tj; ++k)
            c[static_cast<Eigen::Index>(n) * (p.n_atoms + 1) + k] =
                photon[static_cast<std::size_t>(n)] * atom[static_cast<std::size_t>(k)];

    if (policy == TailPolicy::renormalize) c /= c.norm();
    return c;
}

inline void write_surface_csv(std::ostream& out, const SurfaceGrid& g) {
    io::csv_row(out, "mu", "nu", "E_over_J");
    for (Eigen::Index a = 0; a < g.mu_axis.size(); ++a)
        for (Eigen::Index b = 0; b < g.nu_axis.size(); ++b)
            io::csv_row(out, g.mu_axis[a], g.nu_axis[b], g.values_over_j(a, b));
}

inline void write_quench_grid_csv(std::ostream& out, const QuenchEnergyGrid& g) {
    io::csv_row(out, "lambda_i", "lambda_f", "E_over_J");
    for (Eigen::Index a = 0; a < g.lambda_i_axis.size(); ++a)
        for (Eigen::Index b = 0; b < g.lambda_f_axis.size(); ++b)
            io::csv_row(out, g.lambda_i_axis[a], g.lambda_f_axis[b], g.values_over_j(a, b));
}

inline void write_contours_csv(std::ostream& out, const std::vector<contour::Polyline>& lines,
                               const std::string& x_name, const std::string& y_name) {
    io::csv_row(out, "contour_id", x_name, y_name);
    for (std::size_t id = 0; id < lines.size(); ++id)
        for (const auto& [x, y] : lines[id].points) io::csv_row(out, id, x, y);
}

} // namespace dicke::meanfield
