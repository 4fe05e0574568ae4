#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <complex>

#include "dicke/dynamics.hpp"

using namespace dicke;

namespace {

ModelParams params(int n_atoms, int n_max, double lambda) {
    ModelParams p;
    p.n_atoms = n_atoms;
    p.n_max = n_max;
    p.lambda = lambda;
    return p;
}

eig::Spectrum full_spectrum(const ModelParams& p) {
    const auto plus = eig::spectral_decomposition(
        hilbert::build_hamiltonian(p, Sector::plus).matrix, Sector::plus, p.fingerprint());
    const auto minus = eig::spectral_decomposition(
        hilbert::build_hamiltonian(p, Sector::minus).matrix, Sector::minus, p.fingerprint());
    return eig::merge_sector_spectra(plus, minus, p);
}

hilbert::ObservableMatrix as_observable(std::string name, const Eigen::MatrixXd& dense) {
    hilbert::ObservableMatrix obs;
    obs.name = std::move(name);
    obs.matrix = dense.sparseView();
    return obs;
}

// independent oracle: fixed-step fourth-order integration of
// i d/dt psi = H psi, never touching the eigenbasis machinery
Eigen::VectorXcd rk4_advance(const Eigen::MatrixXcd& h, Eigen::VectorXcd psi, double duration,
                             double dt) {
    const std::complex<double> minus_i(0.0, -1.0);
    auto rhs = [&](const Eigen::VectorXcd& v) { return (minus_i * (h * v)).eval(); };
    double t = 0.0;
    while (t < duration - 1e-15) {
        const double step = std::min(dt, duration - t);
        const Eigen::VectorXcd k1 = rhs(psi);
        const Eigen::VectorXcd k2 = rhs(psi + 0.5 * step * k1);
        const Eigen::VectorXcd k3 = rhs(psi + 0.5 * step * k2);
        const Eigen::VectorXcd k4 = rhs(psi + step * k3);
        psi += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
    }
    return psi;
}

} // namespace

TEST_CASE("expansion of an eigenvector is a coordinate vector") {
    const auto p = params(3, 5, 0.8);
    const auto full = full_spectrum(p);
    const Eigen::VectorXd psi0 = full.eigenvectors.col(4);
    const auto c = dynamics::expansion_coefficients(psi0, full);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        REQUIRE(c[i] == Catch::Approx(i == 4 ? 1.0 : 0.0).margin(1e-12));
}

TEST_CASE("expansion rejects unnormalized states") {
    const auto p = params(2, 3, 0.4);
    const auto full = full_spectrum(p);
    Eigen::VectorXd psi0 = Eigen::VectorXd::Zero(full.eigenvectors.rows());
    psi0[0] = 0.7;
    REQUIRE_THROWS_AS(dynamics::expansion_coefficients(psi0, full), std::invalid_argument);
}

TEST_CASE("initial sample equals the direct sandwich") {
    const auto p = params(4, 10, 1.1);
    const auto full = full_spectrum(p);
    const auto psi0 = meanfield::coherent_state_vector(
        0.6, -0.8, p, meanfield::TailPolicy::renormalize);
    const auto c = dynamics::expansion_coefficients(psi0, full);
    const auto jx = hilbert::build_observable(p, "Jx");
    const auto series = dynamics::evolve_expectation(c, full, jx, {0.0, 0.5, 1.0}, 0.0);
    REQUIRE(series.values[0] == Catch::Approx(psi0.dot(jx.matrix * psi0)).margin(1e-10));
}

TEST_CASE("trajectory is even in time") {
    const auto p = params(3, 8, 1.3);
    const auto full = full_spectrum(p);
    const auto psi0 =
        meanfield::coherent_state_vector(0.4, -0.5, p, meanfield::TailPolicy::renormalize);
    const auto c = dynamics::expansion_coefficients(psi0, full);
    const auto jx = hilbert::build_observable(p, "Jx");
    const auto forward = dynamics::evolve_expectation(c, full, jx, {0.7, 1.9, 3.1}, 0.0);
    const auto backward = dynamics::evolve_expectation(c, full, jx, {-0.7, -1.9, -3.1}, 0.0);
    for (std::size_t i = 0; i < forward.values.size(); ++i)
        REQUIRE(forward.values[i] == Catch::Approx(backward.values[i]).margin(1e-12));
}

TEST_CASE("energy is conserved along the trajectory") {
    const auto p = params(4, 12, 1.2);
    const auto full = full_spectrum(p);
    const auto psi0 =
        meanfield::coherent_state_vector(0.5, -0.9, p, meanfield::TailPolicy::renormalize);
    const auto c = dynamics::expansion_coefficients(psi0, full);
    const auto h = as_observable("H", hilbert::build_hamiltonian(p, Sector::both).matrix);
    std::vector<double> times;
    for (int k = 0; k <= 50; ++k) times.push_back(0.4 * k);
    const auto series = dynamics::evolve_expectation(c, full, h, times, 1e-14);
    for (double v : series.values)
        REQUIRE(v == Catch::Approx(series.values[0]).margin(1e-9 * p.j()));
}

TEST_CASE("eigenbasis evolution matches direct integration") {
    const auto p = params(2, 6, 1.5);
    const auto full = full_spectrum(p);
    const auto psi0 =
        meanfield::coherent_state_vector(0.7, -0.6, p, meanfield::TailPolicy::renormalize);
    const auto c = dynamics::expansion_coefficients(psi0, full);
    const auto jx = hilbert::build_observable(p, "Jx");

    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.5 * k);
    const auto series = dynamics::evolve_expectation(c, full, jx, times, 0.0);

    const Eigen::MatrixXcd h =
        hilbert::build_hamiltonian(p, Sector::both).matrix.cast<std::complex<double>>();
    Eigen::VectorXcd psi = psi0.cast<std::complex<double>>();
    double t = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        psi = rk4_advance(h, psi, times[k] - t, 2e-4);
        t = times[k];
        const std::complex<double> value = psi.dot(jx.matrix.cast<std::complex<double>>() * psi);
        REQUIRE(std::abs(value.imag()) < 1e-10);
        REQUIRE(series.values[k] == Catch::Approx(value.real()).margin(1e-8));
        REQUIRE(std::abs(psi.norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("diagonal ensemble basics") {
    const auto p = params(4, 9, 1.0);
    const auto full = full_spectrum(p);
    const auto psi0 =
        meanfield::coherent_state_vector(0.5, -0.7, p, meanfield::TailPolicy::renormalize);
    const auto c = dynamics::expansion_coefficients(psi0, full);

    const auto identity = as_observable(
        "1", Eigen::MatrixXd::Identity(full.eigenvectors.rows(), full.eigenvectors.rows()));
    REQUIRE(dynamics::diagonal_ensemble(c, full, identity).value == Catch::Approx(1.0).margin(1e-12));

    // parity-odd observable over parity-pure eigenvectors: exactly zero
    const auto jx = hilbert::build_observable(p, "Jx");
    REQUIRE(dynamics::diagonal_ensemble(c, full, jx).value == 0.0);

    // the Hamiltonian's diagonal ensemble is the conserved energy
    const auto h = as_observable("H", hilbert::build_hamiltonian(p, Sector::both).matrix);
    const double e = dynamics::diagonal_ensemble(c, full, h).value;
    REQUIRE(e == Catch::Approx((c.array().square() * full.eigenvalues.array()).sum()).margin(1e-10));
}

TEST_CASE("steady state classification") {
    dynamics::TimeSeries series;
    for (int k = 0; k < 200; ++k) {
        series.times.push_back(k * 0.1);
        series.values.push_back(-3.0); // constant -0.3 J for J = 10
    }
    const auto broken = dynamics::steady_state(series, 0.5, 0.05 * 10.0);
    REQUIRE(broken.broken);
    REQUIRE(broken.mean == Catch::Approx(-3.0));
    REQUIRE(broken.rms == Catch::Approx(0.0).margin(1e-12));

    for (int k = 0; k < 200; ++k) series.values[static_cast<std::size_t>(k)] = 0.1 * std::sin(0.37 * k);
    const auto restored = dynamics::steady_state(series, 0.5, 0.05 * 10.0);
    REQUIRE_FALSE(restored.broken);
    REQUIRE(restored.rms > 0.0);

    dynamics::TimeSeries tiny;
    for (int k = 0; k < 12; ++k) {
        tiny.times.push_back(k);
        tiny.values.push_back(0.0);
    }
    REQUIRE_THROWS_AS(dynamics::steady_state(tiny, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("long-time prediction keeps degenerate cross terms") {
    // two exactly degenerate levels plus one far level
    eig::Spectrum s;
    s.sector = Sector::both;
    s.eigenvalues = Eigen::Vector3d(0.0, 0.0, 5.0);
    s.eigenvectors = Eigen::Matrix3d::Identity();
    Eigen::MatrixXd o(3, 3);
    o << 0.0, 0.4, 0.1, 0.4, 0.0, 0.0, 0.1, 0.0, 0.2;
    const auto obs = as_observable("O", o);
    Eigen::Vector3d c(std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2));

    const double prediction = dynamics::long_time_prediction(c, s, obs, 1e-10);
    const double diagonal = 0.2 * 0.2; // only the far level has a diagonal element
    const double cross = 2.0 * c[0] * c[1] * 0.4;
    REQUIRE(prediction == Catch::Approx(diagonal + cross).margin(1e-12));

    // and it equals the numerical long-time average of the trajectory
    std::vector<double> times;
    for (int k = 0; k <= 20000; ++k) times.push_back(0.05 * k);
    const auto series = dynamics::evolve_expectation(c, s, obs, times, 0.0);
    double avg = 0.0;
    for (double v : series.values) avg += v;
    avg /= static_cast<double>(series.values.size());
    REQUIRE(avg == Catch::Approx(prediction).margin(1e-3));
}

TEST_CASE("quench smoke run at small size") {
    ModelParams base;
    base.n_atoms = 6;

    dynamics::QuenchSpec spec;
    spec.lambda_i = 0.9;
    spec.lambda_f = 0.7;
    spec.t_max = 40.0;
    spec.samples = 400;
    spec.threads = 2;

    const auto result = dynamics::run_quench(spec, base);
    REQUIRE(result.e_numeric_over_j ==
            Catch::Approx(result.e_formula_over_j).margin(1e-6));
    REQUIRE(result.series.values.size() == 400);
    REQUIRE(result.diagonal.populations.sum() == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(result.diagonal.value == 0.0); // parity-pure basis, parity-odd observable

    // the first sample is the coherent-state expectation 2 J mu / (1 + mu^2)
    const double mu = result.minima.branch_plus.point.mu;
    REQUIRE(result.series.values[0] ==
            Catch::Approx(base.j() * 2.0 * mu / (1.0 + mu * mu)).margin(1e-8));
    REQUIRE(result.series.values[0] > 0.0);

    // branch -1 starts on the mirrored side
    auto mirrored = spec;
    mirrored.branch = -1;
    const auto flipped = dynamics::run_quench(mirrored, base);
    REQUIRE(flipped.series.values[0] == Catch::Approx(-result.series.values[0]).margin(1e-9));

    REQUIRE_THROWS_AS(
        [&] {
            auto bad = spec;
            bad.lambda_i = 0.3;
            return dynamics::run_quench(bad, base);
        }(),
        std::domain_error);
}

TEST_CASE("identity quench keeps the population on the ground doublet", "[slow]") {
    ModelParams base;
    base.n_atoms = 20;

    dynamics::QuenchSpec spec;
    spec.lambda_i = 1.41;
    spec.lambda_f = 1.41;
    spec.t_max = 10.0;
    spec.samples = 50;
    spec.threads = 2;

    const auto result = dynamics::run_quench(spec, base);
    const double ground_weight = result.diagonal.populations[0] + result.diagonal.populations[1];
    REQUIRE(ground_weight > 0.99);
}
