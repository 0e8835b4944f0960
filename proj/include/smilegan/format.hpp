#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace smilegan {

// 17 significant digits; the fixed ROI CSV schema serialization.
inline std::string format_double_17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double_shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace smilegan
