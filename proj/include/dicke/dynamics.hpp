#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dicke/cache.hpp"
#include "dicke/eigensolver.hpp"
#include "dicke/errors.hpp"
#include "dicke/hilbert.hpp"
#include "dicke/io.hpp"
#include "dicke/meanfield.hpp"
#include "dicke/parallel.hpp"
#include "dicke/phase_diagram.hpp"

namespace dicke::dynamics {

/// Overlaps of the initial state with the post-quench eigenbasis. Real
/// throughout: the Hamiltonian is real symmetric and the initial
/// coefficients are real.
inline Eigen::VectorXd expansion_coefficients(const Eigen::VectorXd& initial_state,
                                              const eig::Spectrum& spectrum) {
    if (!spectrum.has_vectors())
        throw std::invalid_argument("expansion_coefficients: spectrum carries no eigenvectors");
    if (initial_state.size() != spectrum.eigenvectors.rows())
        throw std::invalid_argument("expansion_coefficients: dimension mismatch");
    if (std::abs(initial_state.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("expansion_coefficients: initial state not normalized");
    Eigen::VectorXd c = spectrum.eigenvectors.transpose() * initial_state;
    const double captured = c.squaredNorm();
    if (std::abs(captured - 1.0) > 1e-10)
        throw ConvergenceError("expansion_coefficients: captured norm " + io::format_double(captured) +
                               " deviates from 1; cutoff too small for this quench energy");
    return c;
}

struct TimeSeries {
    std::string observable;
    std::vector<double> times;
    std::vector<double> values;
    double e_over_j = 0.0; // energy of the initial state under the evolving Hamiltonian
    double steady_mean = 0.0;
    double steady_rms = 0.0;
    std::string classification; // "broken" | "restored"
};

struct DiagonalEnsemble {
    std::string observable;
    double value = 0.0;
    Eigen::VectorXd populations; // |C_i|^2
};

namespace detail {

// The eigenpair double sum reduced to its population-significant part.
// With real C and a real symmetric observable the trajectory is exactly
//   value(t) = diagonal + sum_pairs weight * cos(gap * t).
struct PairSum {
    double diagonal = 0.0;
    std::vector<double> gaps;    // E_i - E_j, i < j
    std::vector<double> weights; // 2 C_i C_j O_ij
};

inline PairSum prepare_pair_sum(const Eigen::VectorXd& c, const eig::Spectrum& s,
                                const Eigen::SparseMatrix<double>& obs, double drop_tolerance) {
    if (!s.has_vectors()) throw std::invalid_argument("evolve_expectation: spectrum has no eigenvectors");
    if (c.size() != s.eigenvectors.cols() || obs.rows() != s.eigenvectors.rows())
        throw std::invalid_argument("evolve_expectation: dimension mismatch");

    const double cmax = c.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (std::abs(c[i]) * cmax > drop_tolerance) keep.push_back(i);

    const auto ns = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd v(s.eigenvectors.rows(), ns);
    for (Eigen::Index k = 0; k < ns; ++k) v.col(k) = s.eigenvectors.col(keep[static_cast<std::size_t>(k)]);
    const Eigen::MatrixXd obs_eigen = v.transpose() * (obs * v);

    PairSum ps;
    for (Eigen::Index a = 0; a < ns; ++a) {
        const double ca = c[keep[static_cast<std::size_t>(a)]];
        ps.diagonal += ca * ca * obs_eigen(a, a);
        for (Eigen::Index b = a + 1; b < ns; ++b) {
            const double cb = c[keep[static_cast<std::size_t>(b)]];
            if (!(std::abs(ca * cb) > drop_tolerance)) continue;
            const double w = 2.0 * ca * cb * obs_eigen(a, b);
            if (w == 0.0) continue; // opposite-parity blocks leave exact zeros
            ps.gaps.push_back(s.eigenvalues[keep[static_cast<std::size_t>(a)]] -
                              s.eigenvalues[keep[static_cast<std::size_t>(b)]]);
            ps.weights.push_back(w);
        }
    }
    return ps;
}

} // namespace detail

/// Expectation-value trajectory of a real symmetric observable after a
/// quench, from the eigenpair double sum restricted to pairs with
/// |C_i C_j| above the drop tolerance (0 recovers the exact sum).
inline TimeSeries evolve_expectation(const Eigen::VectorXd& c, const eig::Spectrum& spectrum,
                                     const hilbert::ObservableMatrix& obs,
                                     const std::vector<double>& times, double drop_tolerance = 1e-14,
                                     int threads = 1) {
    const auto ps = detail::prepare_pair_sum(c, spectrum, obs.matrix, drop_tolerance);
    TimeSeries series;
    series.observable = obs.name;
    series.times = times;
    series.values.assign(times.size(), 0.0);
    par::parallel_index(times.size(), threads, [&](std::size_t k) {
        const double t = times[k];
        double acc = ps.diagonal;
        const std::size_t n = ps.gaps.size();
        for (std::size_t q = 0; q < n; ++q) acc += ps.weights[q] * std::cos(ps.gaps[q] * t);
        series.values[k] = acc;
    });
    return series;
}

/// Population-weighted diagonal expectation value; the steady-state
/// prediction when the spectrum is nondegenerate.
inline DiagonalEnsemble diagonal_ensemble(const Eigen::VectorXd& c, const eig::Spectrum& spectrum,
                                          const hilbert::ObservableMatrix& obs) {
    if (!spectrum.has_vectors())
        throw std::invalid_argument("diagonal_ensemble: spectrum has no eigenvectors");
    if (c.size() != spectrum.eigenvectors.cols())
        throw std::invalid_argument("diagonal_ensemble: dimension mismatch");
    DiagonalEnsemble d;
    d.observable = obs.name;
    d.populations = c.array().square();
    if (std::abs(d.populations.sum() - 1.0) > 1e-10)
        throw std::invalid_argument("diagonal_ensemble: populations do not sum to 1 within 1e-10");
    double value = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (d.populations[i] == 0.0) continue;
        const auto vi = spectrum.eigenvectors.col(i);
        value += d.populations[i] * vi.dot(obs.matrix * vi);
    }
    d.value = value;
    return d;
}

/// Long-time average of the trajectory: the diagonal value plus the cross
/// terms of eigenpairs degenerate within `degeneracy_tolerance`. In the
/// parity-restored phase the cross terms vanish; inside degenerate doublets
/// they persist and sustain a nonzero steady value.
inline double long_time_prediction(const Eigen::VectorXd& c, const eig::Spectrum& spectrum,
                                   const hilbert::ObservableMatrix& obs,
                                   double degeneracy_tolerance) {
    if (!spectrum.has_vectors())
        throw std::invalid_argument("long_time_prediction: spectrum has no eigenvectors");
    double value = 0.0;
    const auto n = c.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto vi = spectrum.eigenvectors.col(i);
        if (c[i] == 0.0) continue;
        value += c[i] * c[i] * vi.dot(obs.matrix * vi);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (spectrum.eigenvalues[j] - spectrum.eigenvalues[i] >= degeneracy_tolerance) break;
            if (c[j] == 0.0) continue;
            value += 2.0 * c[i] * c[j] * vi.dot(obs.matrix * spectrum.eigenvectors.col(j));
        }
    }
    return value;
}

struct SteadyStats {
    double mean = 0.0;
    double rms = 0.0; // fluctuation around the mean inside the window
    bool broken = false;
};

/// Mean and fluctuation over the trailing window of the series;
/// |mean| above the threshold classifies the steady state as
/// symmetry-broken.
inline SteadyStats steady_state(const TimeSeries& series, double window_fraction,
                                double threshold) {
    if (!(window_fraction > 0.0) || !(window_fraction <= 1.0))
        throw std::invalid_argument("steady_state: window fraction must be in (0, 1]");
    const std::size_t n = series.values.size();
    const auto start = static_cast<std::size_t>(std::floor((1.0 - window_fraction) * n));
    const std::size_t count = n - start;
    if (count < 10) throw std::invalid_argument("steady_state: window shorter than 10 samples");
    double mean = 0.0;
    for (std::size_t i = start; i < n; ++i) mean += series.values[i];
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = start; i < n; ++i) {
        const double d = series.values[i] - mean;
        var += d * d;
    }
    SteadyStats stats;
    stats.mean = mean;
    stats.rms = std::sqrt(var / static_cast<double>(count));
    stats.broken = std::abs(mean) > threshold;
    return stats;
}

struct QuenchSpec {
    double lambda_i = 0.0;
    double lambda_f = 0.0;
    int branch = +1;              // +1 picks the minimum with mu > 0
    std::string observable = "Jx";
    double t_max = 200.0;         // units of 1/omega
    int samples = 4000;
    double window_fraction = 0.5;
    double threshold_over_j = 0.05;
    double drop_tolerance = 1e-14;
    std::optional<int> n_max_override;
    int threads = 1;
};

struct QuenchResult {
    ModelParams params; // with the resolved cutoff, lambda = lambda_f
    meanfield::MinimumPair minima;
    double e_formula_over_j = 0.0; // closed-form quench energy
    double e_numeric_over_j = 0.0; // sum C_i^2 E_i / J
    TimeSeries series;
    SteadyStats steady;
    DiagonalEnsemble diagonal;
    double long_time_prediction = 0.0;
    int n_max = 0;
    Eigen::VectorXd eigenvalues; // merged post-quench ladder, aligned with populations
};

/// Full quench protocol: symmetry-broken minimum at lambda_i, diabatic
/// switch to lambda_f, eigenbasis evolution, steady-state statistics and
/// the diagonal-ensemble prediction.
inline QuenchResult run_quench(const QuenchSpec& spec, const ModelParams& base,
                               const cache::SpectrumCache* cache = nullptr) {
    base.validate();
    if (!(spec.lambda_i > base.lambda_critical()))
        throw std::domain_error("run_quench: lambda_i must exceed lambda_c");
    if (spec.branch != +1 && spec.branch != -1)
        throw std::invalid_argument("run_quench: branch must be +1 or -1");
    if (spec.samples < 2) throw std::invalid_argument("run_quench: need at least 2 samples");

    QuenchResult result;
    result.minima = meanfield::minimize_surface(spec.lambda_i, base);
    const auto& branch_min =
        spec.branch == +1 ? result.minima.branch_plus : result.minima.branch_minus;
    const double j = base.j();
    result.e_formula_over_j = meanfield::quench_energy(spec.lambda_i, spec.lambda_f, base) / j;

    // Cutoff: the heuristic at the larger coupling, grown if the initial
    // state's photonic tail demands it, then certified against the energy
    // window holding the populated states.
    ModelParams p_i = base, p_f = base;
    p_i.lambda = spec.lambda_i;
    p_f.lambda = spec.lambda_f;
    int n_max;
    if (spec.n_max_override) {
        n_max = *spec.n_max_override;
    } else {
        n_max = std::max(phase::heuristic_cutoff(p_i), phase::heuristic_cutoff(p_f));
        while (!(meanfield::coherent_photon_tail(branch_min.point.nu, n_max) <
                 meanfield::coherent_tail_tolerance))
            n_max = static_cast<int>(std::ceil(n_max * 1.25));
        const double window_top = result.e_formula_over_j + 3.0;
        const int converged =
            phase::cutoff_convergence(p_f, window_top, 0.2, 1e-8, cache, spec.threads);
        n_max = std::max(n_max, converged);
    }
    p_i.n_max = n_max;
    p_f.n_max = n_max;
    result.n_max = n_max;
    result.params = p_f;

    const Eigen::VectorXd psi0 =
        meanfield::coherent_state_vector(branch_min.point.mu, branch_min.point.nu, p_i);

    eig::Spectrum plus, minus;
    par::parallel_index(2, spec.threads, [&](std::size_t k) {
        const Sector sector = k == 0 ? Sector::plus : Sector::minus;
        auto solve = [&]() {
            auto block = hilbert::build_hamiltonian(p_f, sector);
            return eig::spectral_decomposition(block.matrix, sector, p_f.fingerprint());
        };
        auto& dst = k == 0 ? plus : minus;
        dst = cache ? cache->get_or_compute(p_f, sector, cache::solver_tag_full, solve) : solve();
    });
    const eig::Spectrum full = eig::merge_sector_spectra(plus, minus, p_f);

    const Eigen::VectorXd c = expansion_coefficients(psi0, full);
    result.e_numeric_over_j = (c.array().square() * full.eigenvalues.array()).sum() / j;

    const auto obs = hilbert::build_observable(p_f, spec.observable);
    std::vector<double> times(static_cast<std::size_t>(spec.samples));
    for (int k = 0; k < spec.samples; ++k)
        times[static_cast<std::size_t>(k)] =
            spec.t_max * static_cast<double>(k) / (spec.samples - 1);

    result.series = evolve_expectation(c, full, obs, times, spec.drop_tolerance, spec.threads);
    result.series.e_over_j = result.e_numeric_over_j;
    result.steady = steady_state(result.series, spec.window_fraction, spec.threshold_over_j * j);
    result.series.steady_mean = result.steady.mean;
    result.series.steady_rms = result.steady.rms;
    result.series.classification = result.steady.broken ? "broken" : "restored";
    result.diagonal = diagonal_ensemble(c, full, obs);
    result.long_time_prediction = long_time_prediction(c, full, obs, 1e-10 * base.omega);
    result.eigenvalues = full.eigenvalues;
    return result;
}

inline void write_series_csv(std::ostream& out, const TimeSeries& series, double j) {
    io::csv_row(out, "t", "value_over_J");
    for (std::size_t i = 0; i < series.times.size(); ++i)
        io::csv_row(out, series.times[i], series.values[i] / j);
}

inline void write_populations_csv(std::ostream& out, const QuenchResult& result, double j) {
    io::csv_row(out, "index", "energy_over_J", "population");
    for (Eigen::Index i = 0; i < result.diagonal.populations.size(); ++i)
        io::csv_row(out, static_cast<int>(i), result.eigenvalues[i] / j,
                    result.diagonal.populations[i]);
}

} // namespace dicke::dynamics
