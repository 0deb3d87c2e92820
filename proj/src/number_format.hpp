#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "fgsm/error.hpp"

namespace fgsm::detail {

// Shortest decimal text that parses back to exactly `v`.
inline std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw StateError("number formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string shortest(float v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw StateError("number formatting failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw FormatError("bad number for " + what + ": \"" + text + "\"");
    return v;
}

inline unsigned long long parse_uint(const std::string& text, const std::string& what) {
    unsigned long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw FormatError("bad integer for " + what + ": \"" + text + "\"");
    return v;
}

} // namespace fgsm::detail
