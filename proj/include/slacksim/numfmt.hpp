#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace slacksim {

/// Shortest round-trip decimal representation of a double. Deterministic
/// across platforms (std::to_chars, not locale-dependent iostreams).
inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

/// Fixed-precision decimal, for human-facing tables. Deterministic given a
/// deterministic value.
inline std::string fmt_fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return std::string(buf);
}

}  // namespace slacksim
