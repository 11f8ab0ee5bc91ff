#pragma once

// Shortest round-trip decimal formatting for reproducible, diff-stable text
// output (config files, CSV, reports).

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

namespace mdiqss::detail {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string format_int(long long x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace mdiqss::detail
