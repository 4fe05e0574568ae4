#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dicke/model.hpp"

namespace dicke::hilbert {

/// H = omega0*Jz + omega*a'a + (2 lambda / sqrt(N)) (a' + a) Jx restricted to
/// one parity sector (or the full space), dense symmetric, assembled
/// symmetrically entry by entry.
struct ParityBlock {
    Sector sector = Sector::both;
    std::vector<BasisState> basis;
    Eigen::MatrixXd matrix;
};

/// Same operator in LAPACK lower band storage: column j holds A(j..j+kd, j).
/// In the n-major ordering the coupling reaches at most one photon group
/// ahead, so kd is about (N+3)/2 per sector.
struct BandedBlock {
    Sector sector = Sector::both;
    std::vector<BasisState> basis;
    int kd = 0;
    Eigen::MatrixXd ab; // (kd+1) x dim
};

/// Parity-odd observable on the canonical full basis. Sparse: two
/// couplings per basis state at most.
struct ObservableMatrix {
    std::string name;
    Eigen::SparseMatrix<double> matrix;
};

namespace detail {

// Position lookup (n, 2m) -> index within a given basis ordering; -1 if absent.
class BasisIndex {
public:
    BasisIndex(const std::vector<BasisState>& basis, const ModelParams& p)
        : n_cols_(p.n_atoms + 1), slots_(p.full_dimension(), -1) {
        for (std::size_t i = 0; i < basis.size(); ++i)
            slots_[full_basis_index(basis[i], p)] = static_cast<long>(i);
        tj_ = p.twice_j();
    }

    long find(int n, int tm) const {
        if (tm < -tj_ || tm > tj_) return -1;
        const std::size_t slot = static_cast<std::size_t>(n) * n_cols_ + (tm + tj_) / 2;
        return slot < slots_.size() ? slots_[slot] : -1;
    }

private:
    std::size_t n_cols_;
    int tj_ = 0;
    std::vector<long> slots_;
};

// <J, m +- 1| Jx |J, m> = (1/2) sqrt(J(J+1) - m(m +- 1))
inline double jx_element(int twice_j, int twice_m, int dm) {
    const double j = 0.5 * twice_j;
    const double m = 0.5 * twice_m;
    return 0.5 * std::sqrt(j * (j + 1.0) - m * (m + dm));
}

// <n + 1| a' + a |n> = sqrt(n + 1)
inline double ladder_element(int n_lower) { return std::sqrt(static_cast<double>(n_lower + 1)); }

inline void check_block_dimension(const ModelParams& p, std::size_t dim) {
    if (dim > p.dim_limit)
        throw std::length_error("hilbert: block dimension " + std::to_string(dim) +
                                " exceeds the configured limit " + std::to_string(p.dim_limit));
}

struct Coupling {
    long row;
    long col; // col > row
    double value;
};

// All interaction couplings (i < j) of the block; diagonal handled separately.
template <class Emit>
void for_each_coupling(const ModelParams& p, const std::vector<BasisState>& basis,
                       const BasisIndex& index, Sector sector, Emit&& emit) {
    const double g = 2.0 * p.lambda / std::sqrt(static_cast<double>(p.n_atoms));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& s = basis[i];
        if (s.n + 1 > p.n_max) continue;
        for (int dm : {-1, +1}) {
            const int tm_next = s.twice_m + 2 * dm;
            if (tm_next < -p.twice_j() || tm_next > p.twice_j()) continue;
            const long j = index.find(s.n + 1, tm_next);
            // Parity conservation guarantees the partner exists inside the
            // sector; a miss would be an assembly bug, not filterable data.
            if (j < 0) {
                if (sector != Sector::both)
                    throw std::logic_error("hilbert: coupling escaped its parity sector");
                continue;
            }
            const double v = g * ladder_element(s.n) * jx_element(p.twice_j(), s.twice_m, dm);
            emit(Coupling{static_cast<long>(i), j, v});
        }
    }
}

} // namespace detail

inline ParityBlock build_hamiltonian(const ModelParams& p, Sector sector) {
    p.validate();
    auto basis = build_basis(p, sector);
    detail::check_block_dimension(p, basis.size());
    const auto dim = static_cast<Eigen::Index>(basis.size());
    detail::BasisIndex index(basis, p);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        h(i, i) = p.omega0 * basis[i].m() + p.omega * basis[i].n;
    detail::for_each_coupling(p, basis, index, sector, [&](const detail::Coupling& c) {
        h(c.row, c.col) = c.value;
        h(c.col, c.row) = c.value;
    });
    return ParityBlock{sector, std::move(basis), std::move(h)};
}

inline BandedBlock build_hamiltonian_banded(const ModelParams& p, Sector sector) {
    p.validate();
    auto basis = build_basis(p, sector);
    detail::check_block_dimension(p, basis.size());
    const auto dim = static_cast<Eigen::Index>(basis.size());
    detail::BasisIndex index(basis, p);

    int kd = 0;
    detail::for_each_coupling(p, basis, index, sector, [&](const detail::Coupling& c) {
        kd = std::max(kd, static_cast<int>(c.col - c.row));
    });

    Eigen::MatrixXd ab = Eigen::MatrixXd::Zero(kd + 1, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        ab(0, i) = p.omega0 * basis[i].m() + p.omega * basis[i].n;
    detail::for_each_coupling(p, basis, index, sector, [&](const detail::Coupling& c) {
        ab(c.col - c.row, c.row) = c.value;
    });
    return BandedBlock{sector, std::move(basis), kd, std::move(ab)};
}

/// Jx or q = (a' + a)/sqrt(2) on the canonical full basis. Both flip parity:
/// every nonzero element connects opposite-parity states.
inline ObservableMatrix build_observable(const ModelParams& p, std::string_view name) {
    p.validate();
    const auto basis = build_basis(p, Sector::both);
    detail::check_block_dimension(p, basis.size());
    const auto dim = static_cast<Eigen::Index>(basis.size());
    detail::BasisIndex index(basis, p);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * basis.size());
    if (name == "Jx") {
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const auto& s = basis[i];
            const int tm_up = s.twice_m + 2;
            if (tm_up > p.twice_j()) continue;
            const long j = index.find(s.n, tm_up);
            const double v = detail::jx_element(p.twice_j(), s.twice_m, +1);
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
        }
    } else if (name == "q") {
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const auto& s = basis[i];
            if (s.n + 1 > p.n_max) continue;
            const long j = index.find(s.n + 1, s.twice_m);
            const double v = detail::ladder_element(s.n) * inv_sqrt2;
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
        }
    } else {
        throw std::invalid_argument("build_observable: unknown observable '" + std::string(name) +
                                    "' (expected Jx or q)");
    }

    Eigen::SparseMatrix<double> m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return ObservableMatrix{std::string(name), std::move(m)};
}

} // namespace dicke::hilbert
