#pragma once

#include <unistd.h>

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <string_view>

#include "dicke/detail/sha256.hpp"
#include "dicke/eigensolver.hpp"
#include "dicke/errors.hpp"
#include "dicke/model.hpp"

namespace dicke::cache {

static_assert(std::endian::native == std::endian::little,
              "spectrum cache files are little-endian; big-endian hosts unsupported");

inline constexpr std::uint32_t format_version = 1;
inline constexpr char magic[8] = {'D', 'I', 'C', 'K', 'E', 'S', 'P', 'C'};

// Solver identity participates in the key so values-only and full solves
// never alias.
inline constexpr const char* solver_tag_full = "lapack-dsyevd-v1";
inline constexpr const char* solver_tag_values_banded = "lapack-dsbev-novec-v1";

inline std::string spectrum_key(const ModelParams& p, Sector sector, std::string_view solver_tag) {
    std::string canonical = "dicke.spectrum";
    canonical += "|omega=" + io::format_double(p.omega);
    canonical += "|omega0=" + io::format_double(p.omega0);
    canonical += "|lambda=" + io::format_double(p.lambda);
    canonical += "|n_atoms=" + std::to_string(p.n_atoms);
    canonical += "|n_max=" + std::to_string(p.n_max);
    canonical += "|sector=" + std::to_string(sector_sign(sector));
    canonical += "|solver=";
    canonical += solver_tag;
    return detail::sha256_hex(canonical);
}

namespace detail {

template <class T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool read_raw(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}

} // namespace detail

/// On-disk spectrum store addressed by key. Payload layout (little-endian):
/// magic, u32 version, u32 key length + key bytes, i32 sector, u64 value
/// count, u64 vector rows, u64 vector cols, then raw 64-bit floats
/// (eigenvalues, eigenvectors column-major). Doubles round-trip bit-exactly.
class SpectrumCache {
public:
    explicit SpectrumCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cache: cannot create directory " + dir_.string() + ": " + ec.message());
    }

    const std::filesystem::path& dir() const { return dir_; }

    eig::Spectrum get_or_compute(const ModelParams& p, Sector sector, std::string_view solver_tag,
                                 const std::function<eig::Spectrum()>& solve) const {
        const std::string key = spectrum_key(p, sector, solver_tag);
        const auto file = dir_ / (key + ".spc");
        if (std::filesystem::exists(file)) {
            try {
                return read_file(file, key, p, sector);
            } catch (const IoError&) {
                throw; // key mismatch is a hard error, never silently recomputed
            } catch (const std::exception& e) {
                std::cerr << "dicke cache: corrupt entry " << file.string() << " (" << e.what()
                          << "); recomputing\n";
            }
        }
        eig::Spectrum s = solve();
        write_file(file, key, s);
        return s;
    }

    static void write_file(const std::filesystem::path& file, const std::string& key,
                           const eig::Spectrum& s) {
        // Write-to-temp plus atomic rename; concurrent writers of one key
        // produce identical content, so last-writer-wins is safe.
        static std::atomic<std::uint64_t> nonce{0};
        const auto tmp = file.parent_path() /
                         (file.filename().string() + ".tmp" + std::to_string(nonce.fetch_add(1)) +
                          "-" + std::to_string(::getpid()));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cache: cannot open " + tmp.string() + " for writing");
            out.write(magic, sizeof(magic));
            detail::write_raw(out, format_version);
            detail::write_raw(out, static_cast<std::uint32_t>(key.size()));
            out.write(key.data(), static_cast<std::streamsize>(key.size()));
            detail::write_raw(out, static_cast<std::int32_t>(sector_sign(s.sector)));
            detail::write_raw(out, static_cast<std::uint64_t>(s.eigenvalues.size()));
            detail::write_raw(out, static_cast<std::uint64_t>(s.eigenvectors.rows()));
            detail::write_raw(out, static_cast<std::uint64_t>(s.eigenvectors.cols()));
            out.write(reinterpret_cast<const char*>(s.eigenvalues.data()),
                      static_cast<std::streamsize>(sizeof(double) * s.eigenvalues.size()));
            out.write(reinterpret_cast<const char*>(s.eigenvectors.data()),
                      static_cast<std::streamsize>(sizeof(double) * s.eigenvectors.size()));
            if (!out) throw IoError("cache: short write to " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, file, ec);
        if (ec) {
            std::filesystem::remove(tmp);
            throw IoError("cache: rename failed for " + file.string() + ": " + ec.message());
        }
    }

    static eig::Spectrum read_file(const std::filesystem::path& file, const std::string& expected_key,
                                   const ModelParams& p, Sector sector) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw std::runtime_error("unreadable file");
        char got_magic[8];
        in.read(got_magic, sizeof(got_magic));
        if (!in || std::memcmp(got_magic, magic, sizeof(magic)) != 0)
            throw std::runtime_error("bad magic");
        std::uint32_t version = 0, key_len = 0;
        if (!detail::read_raw(in, version) || version != format_version)
            throw std::runtime_error("unsupported version");
        if (!detail::read_raw(in, key_len) || key_len == 0 || key_len > 4096)
            throw std::runtime_error("bad key length");
        std::string key(key_len, '\0');
        in.read(key.data(), key_len);
        if (!in) throw std::runtime_error("truncated key");
        if (key != expected_key)
            throw IoError("cache: key mismatch in " + file.string() + " (expected " + expected_key +
                          ", found " + key + ")");
        std::int32_t sec = 0;
        std::uint64_t n_values = 0, rows = 0, cols = 0;
        if (!detail::read_raw(in, sec) || !detail::read_raw(in, n_values) ||
            !detail::read_raw(in, rows) || !detail::read_raw(in, cols))
            throw std::runtime_error("truncated header");
        if (sec != sector_sign(sector)) throw std::runtime_error("sector field mismatch");

        eig::Spectrum s;
        s.sector = sector;
        s.params_fingerprint = p.fingerprint();
        s.eigenvalues.resize(static_cast<Eigen::Index>(n_values));
        s.eigenvectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        in.read(reinterpret_cast<char*>(s.eigenvalues.data()),
                static_cast<std::streamsize>(sizeof(double) * n_values));
        in.read(reinterpret_cast<char*>(s.eigenvectors.data()),
                static_cast<std::streamsize>(sizeof(double) * rows * cols));
        if (!in) throw std::runtime_error("truncated payload");
        return s;
    }

private:
    std::filesystem::path dir_;
};

} // namespace dicke::cache
