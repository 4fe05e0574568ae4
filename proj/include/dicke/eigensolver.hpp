#pragma once

#include <Eigen/Core>
#include <lapacke.h>

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dicke/errors.hpp"
#include "dicke/model.hpp"
#include "dicke/parallel.hpp"

namespace dicke::eig {

/// Full or partial spectral decomposition of a real symmetric matrix.
///
/// Invariants: eigenvalues ascending; columns of `eigenvectors` orthonormal
/// (max deviation 1e-10) and residual ||HV - VL||_max <= 1e-8 max(1, ||H||_max)
/// whenever vectors are present. `verify` measures both.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors; // column-aligned with eigenvalues; empty for values-only solves
    Sector sector = Sector::both;
    std::string params_fingerprint;

    bool has_vectors() const { return eigenvectors.size() > 0; }
    Eigen::Index size() const { return eigenvalues.size(); }
};

/// Number of eigensolver kernel invocations in this process. Lets callers
/// verify that a cache hit did not reach the solver.
inline std::atomic<std::uint64_t>& solve_counter() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}
inline std::uint64_t solve_count() { return solve_counter().load(); }

namespace detail {

inline void check_square_finite(const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
    if (m.size() == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
    if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

// Sign convention: largest-magnitude component of each eigenvector positive,
// first such component deciding ties. Keeps regression output reproducible.
inline void fix_column_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            const double a = std::abs(v(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
    }
}

[[noreturn]] inline void raise_lapack_failure(const char* routine, int info, Eigen::Index dim,
                                              const std::string& fingerprint) {
    throw ConvergenceError(std::string("eigensolver: ") + routine + " failed (info=" +
                           std::to_string(info) + ", dim=" + std::to_string(dim) +
                           ", fingerprint=" + (fingerprint.empty() ? "<none>" : fingerprint) + ")");
}

} // namespace detail

/// All eigenpairs via divide-and-conquer (Householder tridiagonalization
/// underneath). Deterministic for identical input: BLAS threads are pinned.
inline Spectrum spectral_decomposition(const Eigen::MatrixXd& matrix, Sector sector = Sector::both,
                                       std::string fingerprint = {}) {
    detail::check_square_finite(matrix, "spectral_decomposition");
    par::pin_blas_single_thread();

    Spectrum s;
    s.sector = sector;
    s.params_fingerprint = std::move(fingerprint);
    s.eigenvectors = matrix; // solved in place
    const auto n = static_cast<lapack_int>(matrix.rows());
    s.eigenvalues.resize(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, s.eigenvectors.data(), n,
                                    s.eigenvalues.data());
    if (info != 0) detail::raise_lapack_failure("dsyevd", info, matrix.rows(), s.params_fingerprint);
    solve_counter().fetch_add(1);
    detail::fix_column_signs(s.eigenvectors);
    return s;
}

/// Lowest k eigenpairs (MRRR with index range selection).
inline Spectrum partial_lowest(const Eigen::MatrixXd& matrix, int k, Sector sector = Sector::both,
                               std::string fingerprint = {}) {
    detail::check_square_finite(matrix, "partial_lowest");
    if (k < 1 || k > matrix.rows())
        throw std::invalid_argument("partial_lowest: k out of range 1..dim");
    par::pin_blas_single_thread();

    const auto n = static_cast<lapack_int>(matrix.rows());
    Eigen::MatrixXd work = matrix;
    Eigen::VectorXd w(n);
    Eigen::MatrixXd z(n, k);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    const int info =
        LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1,
                       static_cast<lapack_int>(k), 0.0, &found, w.data(), z.data(), n, isuppz.data());
    if (info != 0 || found != k) detail::raise_lapack_failure("dsyevr", info, matrix.rows(), fingerprint);
    solve_counter().fetch_add(1);

    Spectrum s;
    s.sector = sector;
    s.params_fingerprint = std::move(fingerprint);
    s.eigenvalues = w.head(k);
    s.eigenvectors = std::move(z);
    detail::fix_column_signs(s.eigenvectors);
    return s;
}

/// All eigenvalues, no vectors, dense storage.
inline Eigen::VectorXd eigenvalues_only(const Eigen::MatrixXd& matrix,
                                        const std::string& fingerprint = {}) {
    detail::check_square_finite(matrix, "eigenvalues_only");
    par::pin_blas_single_thread();
    Eigen::MatrixXd work = matrix;
    const auto n = static_cast<lapack_int>(matrix.rows());
    Eigen::VectorXd w(n);
    const int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
    if (info != 0) detail::raise_lapack_failure("dsyev", info, matrix.rows(), fingerprint);
    solve_counter().fetch_add(1);
    return w;
}

/// All eigenvalues of a symmetric band matrix (LAPACK lower band storage,
/// (kd+1) x n). The cheap path for sector spectra: the reduction cost is
/// O(n^2 kd) instead of O(n^3).
inline Eigen::VectorXd eigenvalues_banded(const Eigen::MatrixXd& ab, int kd,
                                          const std::string& fingerprint = {}) {
    if (ab.rows() != kd + 1) throw std::invalid_argument("eigenvalues_banded: band storage shape mismatch");
    if (!ab.allFinite()) throw std::invalid_argument("eigenvalues_banded: non-finite entries");
    par::pin_blas_single_thread();
    Eigen::MatrixXd work = ab;
    const auto n = static_cast<lapack_int>(ab.cols());
    Eigen::VectorXd w(n);
    const int info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'L', n, static_cast<lapack_int>(kd),
                                   work.data(), static_cast<lapack_int>(kd + 1), w.data(), nullptr, 1);
    if (info != 0) detail::raise_lapack_failure("dsbev", info, ab.cols(), fingerprint);
    solve_counter().fetch_add(1);
    return w;
}

struct ResidualReport {
    double orthonormality; // ||V'V - I||_max
    double reconstruction; // ||HV - VL||_max / max(1, ||H||_max)
    double trace_gap;      // |sum(eigenvalues) - tr(H)| / max(1, |tr(H)|)
};

inline ResidualReport verify(const Eigen::MatrixXd& matrix, const Spectrum& s) {
    if (!s.has_vectors()) throw std::invalid_argument("verify: spectrum carries no eigenvectors");
    const auto k = s.eigenvectors.cols();
    const double orth =
        (s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(k, k))
            .cwiseAbs()
            .maxCoeff();
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    const double resid =
        (matrix * s.eigenvectors - s.eigenvectors * s.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() /
        scale;
    const double tr = matrix.trace();
    const double trace_gap = k == matrix.cols()
                                 ? std::abs(s.eigenvalues.sum() - tr) / std::max(1.0, std::abs(tr))
                                 : 0.0;
    return ResidualReport{orth, resid, trace_gap};
}

/// Assembles the full-space spectrum from the two sector spectra. Every
/// eigenvector stays supported on exactly one parity sector, so parity-odd
/// observables have exactly vanishing diagonal matrix elements even inside
/// degenerate doublets. Ties in the energy merge take the plus sector first.
inline Spectrum merge_sector_spectra(const Spectrum& plus, const Spectrum& minus,
                                     const ModelParams& p) {
    if (plus.sector != Sector::plus || minus.sector != Sector::minus)
        throw std::invalid_argument("merge_sector_spectra: sector mismatch");
    if (!plus.has_vectors() || !minus.has_vectors())
        throw std::invalid_argument("merge_sector_spectra: sector spectra need eigenvectors");
    if (!plus.params_fingerprint.empty() && !minus.params_fingerprint.empty() &&
        plus.params_fingerprint != minus.params_fingerprint)
        throw std::invalid_argument("merge_sector_spectra: fingerprint mismatch");

    const auto basis_plus = build_basis(p, Sector::plus);
    const auto basis_minus = build_basis(p, Sector::minus);
    if (static_cast<Eigen::Index>(basis_plus.size()) != plus.size() ||
        static_cast<Eigen::Index>(basis_minus.size()) != minus.size())
        throw std::invalid_argument("merge_sector_spectra: dimensions do not match the parameters");

    const auto dim = static_cast<Eigen::Index>(p.full_dimension());
    Spectrum full;
    full.sector = Sector::both;
    full.params_fingerprint = p.fingerprint();
    full.eigenvalues.resize(dim);
    full.eigenvectors = Eigen::MatrixXd::Zero(dim, dim);

    std::vector<Eigen::Index> rows_plus(basis_plus.size()), rows_minus(basis_minus.size());
    for (std::size_t i = 0; i < basis_plus.size(); ++i)
        rows_plus[i] = static_cast<Eigen::Index>(full_basis_index(basis_plus[i], p));
    for (std::size_t i = 0; i < basis_minus.size(); ++i)
        rows_minus[i] = static_cast<Eigen::Index>(full_basis_index(basis_minus[i], p));

    Eigen::Index ip = 0, im = 0, out = 0;
    while (ip < plus.size() || im < minus.size()) {
        const bool take_plus = im >= minus.size() ||
                               (ip < plus.size() && plus.eigenvalues[ip] <= minus.eigenvalues[im]);
        const Spectrum& src = take_plus ? plus : minus;
        const auto& rows = take_plus ? rows_plus : rows_minus;
        const Eigen::Index col = take_plus ? ip : im;
        full.eigenvalues[out] = src.eigenvalues[col];
        for (Eigen::Index r = 0; r < src.eigenvectors.rows(); ++r)
            full.eigenvectors(rows[r], out) = src.eigenvectors(r, col);
        ++out;
        (take_plus ? ip : im) += 1;
    }
    return full;
}

} // namespace dicke::eig
