#pragma once

#include "invmeas/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace invmeas {

class ParseError : public Error {
public:
    using Error::Error;
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Whole-string decimal parse; "inf" and "-inf" are accepted.
inline double parse_double(std::string_view text) {
    const std::string s = trim(text);
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v))
        throw ParseError("'" + s + "' is not a number");
    return v;
}

inline long long parse_integer(std::string_view text) {
    const std::string s = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("'" + s + "' is not an integer");
    return v;
}

inline int parse_int(std::string_view text) {
    const long long v = parse_integer(text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ParseError("'" + trim(text) + "' is out of range");
    return static_cast<int>(v);
}

inline std::vector<double> parse_double_list(std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
    return out;
}

inline std::vector<int> parse_int_list(std::string_view text) {
    std::vector<int> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_int(item));
    return out;
}

} // namespace invmeas
