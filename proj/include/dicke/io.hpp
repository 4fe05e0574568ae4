#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace dicke::io {

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
    std::array<char, 40> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), p);
}

namespace detail {
inline std::string csv_field(double v) { return format_double(v); }
inline std::string csv_field(int v) { return std::to_string(v); }
inline std::string csv_field(long v) { return std::to_string(v); }
inline std::string csv_field(unsigned long v) { return std::to_string(v); }
inline std::string csv_field(const std::string& v) { return v; }
inline std::string csv_field(std::string_view v) { return std::string(v); }
inline std::string csv_field(const char* v) { return v; }
} // namespace detail

// Comma-separated, header row first, '\n' line ends, dot-decimal floats.
template <class... Fields>
void csv_row(std::ostream& out, const Fields&... fields) {
    const char* sep = "";
    ((out << sep << detail::csv_field(fields), sep = ","), ...);
    out << '\n';
}

} // namespace dicke::io
