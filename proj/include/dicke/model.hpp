#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dicke/detail/sha256.hpp"
#include "dicke/io.hpp"

namespace dicke {

enum class Sector : int { minus = -1, both = 0, plus = +1 };

inline int sector_sign(Sector s) { return static_cast<int>(s); }

inline const char* sector_name(Sector s) {
    switch (s) {
        case Sector::plus: return "plus";
        case Sector::minus: return "minus";
        default: return "full";
    }
}

/// Physical constants of the single-mode spin-boson model, the collective
/// spin size, and the photon-number truncation. Energies are in units of
/// hbar = 1 throughout.
struct ModelParams {
    double omega = 1.0;   // cavity mode frequency
    double omega0 = 1.0;  // atomic transition frequency
    double lambda = 0.0;  // radiation-matter coupling
    int n_atoms = 1;      // N, so the pseudo-spin length is J = N/2
    int n_max = 0;        // photon-number cutoff (inclusive)

    // Guard against accidental memory blowup; per-block matrix dimension cap.
    std::size_t dim_limit = 20000;

    void validate() const {
        if (!(omega > 0.0)) throw std::invalid_argument("ModelParams: omega must be > 0");
        if (!(omega0 > 0.0)) throw std::invalid_argument("ModelParams: omega0 must be > 0");
        if (!(lambda >= 0.0)) throw std::invalid_argument("ModelParams: lambda must be >= 0");
        if (n_atoms < 1) throw std::invalid_argument("ModelParams: n_atoms must be >= 1");
        if (n_max < 0) throw std::invalid_argument("ModelParams: n_max must be >= 0");
    }

    /// Pseudo-spin length J = N/2 (half-integer safe: 2J = n_atoms exactly).
    double j() const { return 0.5 * n_atoms; }
    int twice_j() const { return n_atoms; }

    /// Ground-state critical coupling sqrt(omega*omega0)/2.
    double lambda_critical() const { return 0.5 * std::sqrt(omega * omega0); }

    std::size_t full_dimension() const {
        return static_cast<std::size_t>(n_max + 1) * static_cast<std::size_t>(n_atoms + 1);
    }

    /// Hash of the generating parameters. Deliberately excludes the sector
    /// (spectra of the two sectors of one parameter set must compare equal)
    /// and the dimension cap (which cannot affect results).
    std::string fingerprint() const {
        std::string canonical = "dicke.params";
        canonical += "|omega=" + io::format_double(omega);
        canonical += "|omega0=" + io::format_double(omega0);
        canonical += "|lambda=" + io::format_double(lambda);
        canonical += "|n_atoms=" + std::to_string(n_atoms);
        canonical += "|n_max=" + std::to_string(n_max);
        return detail::sha256_hex(canonical);
    }
};

/// One product-basis state |n> x |J, m>. The magnetic quantum number is
/// stored doubled so half-integer J never meets float equality tests.
struct BasisState {
    int n = 0;        // photon number
    int twice_m = 0;  // 2m, with -2J <= 2m <= 2J in steps of 2

    double m() const { return 0.5 * twice_m; }
    bool operator==(const BasisState&) const = default;
};

/// Exponent of the parity operator on a basis state: J + m + n, an integer
/// because J + m always is.
inline int parity_exponent(const BasisState& s, int twice_j) {
    return (twice_j + s.twice_m) / 2 + s.n;
}

inline int parity_of(const BasisState& s, int twice_j) {
    if (s.n < 0 || s.twice_m < -twice_j || s.twice_m > twice_j || (twice_j + s.twice_m) % 2 != 0)
        throw std::invalid_argument("parity_of: invalid basis state for given J");
    return parity_exponent(s, twice_j) % 2 == 0 ? +1 : -1;
}

/// Position of a state in the canonical full basis: photon-number major,
/// m ascending. Every full-space object in the library uses this layout.
inline std::size_t full_basis_index(const BasisState& s, const ModelParams& p) {
    return static_cast<std::size_t>(s.n) * (p.n_atoms + 1)
         + static_cast<std::size_t>((s.twice_m + p.twice_j()) / 2);
}

/// Ordered basis enumeration (n-major, m ascending), optionally restricted
/// to one parity sector.
inline std::vector<BasisState> build_basis(const ModelParams& p, Sector sector) {
    p.validate();
    const int tj = p.twice_j();
    std::vector<BasisState> basis;
    basis.reserve(sector == Sector::both ? p.full_dimension() : (p.full_dimension() + 1) / 2);
    for (int n = 0; n <= p.n_max; ++n) {
        for (int tm = -tj; tm <= tj; tm += 2) {
            BasisState s{n, tm};
            if (sector == Sector::both || parity_of(s, tj) == sector_sign(sector))
                basis.push_back(s);
        }
    }
    return basis;
}

} // namespace dicke
