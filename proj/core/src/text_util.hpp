#pragma once

// Small private parsing helpers shared by the codecs.

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emowb/types.hpp"

namespace emowb::detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Lines without terminators; a trailing empty line is dropped.
inline std::vector<std::string_view> lines(std::string_view text) {
    auto out = split(text, '\n');
    if (!out.empty() && trim(out.back()).empty()) out.pop_back();
    for (auto& l : out) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    }
    return out;
}

/// Tab if the header line has one, otherwise comma.
inline char detect_delimiter(std::string_view header) {
    return header.find('\t') != std::string_view::npos ? '\t' : ',';
}

inline bool is_nan_token(std::string_view s) {
    s = trim(s);
    return s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "-nan" || s == "NA";
}

/// Finite double or nullopt.
inline std::optional<double> parse_finite(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<Millis> parse_millis(std::string_view s) {
    auto v = parse_finite(s);
    if (!v) return std::nullopt;
    return static_cast<Millis>(std::llround(*v));
}

}  // namespace emowb::detail
