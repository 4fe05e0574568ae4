#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "dicke/eigensolver.hpp"
#include "dicke/hilbert.hpp"

using namespace dicke;

namespace {

Eigen::MatrixXd random_symmetric(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = dist(rng);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

ModelParams dicke_params(int n_atoms, int n_max, double lambda) {
    ModelParams p;
    p.n_atoms = n_atoms;
    p.n_max = n_max;
    p.lambda = lambda;
    return p;
}

} // namespace

TEST_CASE("two-by-two exchange matrix") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, 0.5, 0.5, 0.0;
    const auto s = eig::spectral_decomposition(m);
    REQUIRE(s.eigenvalues[0] == Catch::Approx(-0.5).margin(1e-14));
    REQUIRE(s.eigenvalues[1] == Catch::Approx(+0.5).margin(1e-14));
    // sign convention: largest-magnitude component positive
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg;
        s.eigenvectors.col(c).cwiseAbs().maxCoeff(&arg);
        REQUIRE(s.eigenvectors(arg, c) > 0.0);
    }
}

TEST_CASE("decoupled block spectrum equals its sorted diagonal") {
    const auto p = dicke_params(6, 8, 0.0);
    const auto block = hilbert::build_hamiltonian(p, Sector::plus);
    Eigen::VectorXd diag = block.matrix.diagonal();
    std::sort(diag.begin(), diag.end());
    const auto s = eig::spectral_decomposition(block.matrix, Sector::plus);
    REQUIRE((s.eigenvalues - diag).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("random matrix reconstruction residuals") {
    const auto m = random_symmetric(50, 1234);
    const auto s = eig::spectral_decomposition(m);
    const auto report = eig::verify(m, s);
    REQUIRE(report.orthonormality <= 1e-10);
    REQUIRE(report.reconstruction <= 1e-8);
    REQUIRE(report.trace_gap <= 1e-10);
    REQUIRE(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
}

TEST_CASE("deterministic output for identical input") {
    const auto m = random_symmetric(40, 99);
    const auto a = eig::spectral_decomposition(m);
    const auto b = eig::spectral_decomposition(m);
    REQUIRE(a.eigenvalues == b.eigenvalues);
    REQUIRE(a.eigenvectors == b.eigenvectors);
}

TEST_CASE("partial solve matches the full one") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, 0.5, 0.5, 0.0;
    const auto one = eig::partial_lowest(m, 1);
    REQUIRE(one.eigenvalues.size() == 1);
    REQUIRE(one.eigenvalues[0] == Catch::Approx(-0.5).margin(1e-14));

    const auto a = random_symmetric(30, 7);
    const auto full = eig::spectral_decomposition(a);
    const auto all = eig::partial_lowest(a, 30);
    REQUIRE((full.eigenvalues - all.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);

    const auto p = dicke_params(4, 99, 1.4); // 500 x 500 sector block
    const auto block = hilbert::build_hamiltonian(p, Sector::plus);
    REQUIRE(block.matrix.rows() == 250);
    const auto fullb = eig::spectral_decomposition(block.matrix);
    const auto ten = eig::partial_lowest(block.matrix, 10);
    REQUIRE((fullb.eigenvalues.head(10) - ten.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);

    REQUIRE_THROWS_AS(eig::partial_lowest(a, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(eig::partial_lowest(a, 31), std::invalid_argument);
}

TEST_CASE("banded path agrees with the dense path") {
    const auto p = dicke_params(5, 40, 1.8);
    const auto dense = hilbert::build_hamiltonian(p, Sector::minus);
    const auto banded = hilbert::build_hamiltonian_banded(p, Sector::minus);
    const auto wd = eig::eigenvalues_only(dense.matrix);
    const auto wb = eig::eigenvalues_banded(banded.ab, banded.kd);
    REQUIRE((wd - wb).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, wd.cwiseAbs().maxCoeff()));
}

TEST_CASE("sector spectra merged equal the full spectrum") {
    const auto p = dicke_params(4, 8, 1.2);
    const auto full_block = hilbert::build_hamiltonian(p, Sector::both);
    const auto w_full = eig::eigenvalues_only(full_block.matrix);

    const auto plus = eig::spectral_decomposition(
        hilbert::build_hamiltonian(p, Sector::plus).matrix, Sector::plus, p.fingerprint());
    const auto minus = eig::spectral_decomposition(
        hilbert::build_hamiltonian(p, Sector::minus).matrix, Sector::minus, p.fingerprint());
    const auto merged = eig::merge_sector_spectra(plus, minus, p);
    REQUIRE((merged.eigenvalues - w_full).cwiseAbs().maxCoeff() <= 1e-8);
    REQUIRE(std::is_sorted(merged.eigenvalues.begin(), merged.eigenvalues.end()));

    // merged eigenvectors are parity-pure and still diagonalize the full matrix
    const auto report = eig::verify(full_block.matrix, merged);
    REQUIRE(report.orthonormality <= 1e-10);
    REQUIRE(report.reconstruction <= 1e-8);

    const auto basis = build_basis(p, Sector::both);
    for (Eigen::Index col = 0; col < merged.eigenvectors.cols(); ++col) {
        bool on_plus = false, on_minus = false;
        for (Eigen::Index r = 0; r < merged.eigenvectors.rows(); ++r) {
            if (merged.eigenvectors(r, col) == 0.0) continue;
            (parity_of(basis[static_cast<std::size_t>(r)], p.twice_j()) == +1 ? on_plus : on_minus) =
                true;
        }
        REQUIRE((on_plus && on_minus) == false);
    }
}

TEST_CASE("eigenvalues are invariant under basis permutation") {
    const auto a = random_symmetric(24, 2024);
    std::vector<int> perm(24);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
    Eigen::MatrixXd b(24, 24);
    for (int i = 0; i < 24; ++i)
        for (int j = 0; j < 24; ++j) b(i, j) = a(perm[i], perm[j]);
    const auto wa = eig::spectral_decomposition(a).eigenvalues;
    const auto wb = eig::spectral_decomposition(b).eigenvalues;
    REQUIRE((wa - wb).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, wa.cwiseAbs().maxCoeff()));
}

TEST_CASE("eigenvalue sum equals the trace") {
    const auto p = dicke_params(6, 12, 0.9);
    const auto block = hilbert::build_hamiltonian(p, Sector::plus);
    const auto s = eig::spectral_decomposition(block.matrix);
    const double tr = block.matrix.trace();
    REQUIRE(std::abs(s.eigenvalues.sum() - tr) <= 1e-10 * std::max(1.0, std::abs(tr)));
}

TEST_CASE("solver input checks") {
    Eigen::MatrixXd bad(2, 3);
    bad.setZero();
    REQUIRE_THROWS_AS(eig::spectral_decomposition(bad), std::invalid_argument);

    Eigen::MatrixXd asym(2, 2);
    asym << 0.0, 1.0, 0.0, 0.0;
    REQUIRE_THROWS_AS(eig::spectral_decomposition(asym), std::invalid_argument);

    Eigen::MatrixXd nan2(2, 2);
    nan2.setConstant(std::numeric_limits<double>::quiet_NaN());
    REQUIRE_THROWS_AS(eig::spectral_decomposition(nan2), std::invalid_argument);
}

TEST_CASE("solve counter advances with the solver") {
    const auto before = eig::solve_count();
    eig::spectral_decomposition(random_symmetric(8, 3));
    REQUIRE(eig::solve_count() == before + 1);
}
