#pragma once

#include <charconv>
#include <string>

namespace superpix {

/// Shortest round-trip decimal representation; identical output on every run.
inline std::string format_number(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace superpix
