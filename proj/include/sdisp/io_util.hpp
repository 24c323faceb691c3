#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace sdisp {

// All numeric output uses 10 significant digits.
inline std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string read_file(const std::string& path); // Error(kIo) on failure
void write_file(const std::string& path, std::string_view contents);

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char delim);

// Strict numeric parses; return false on trailing garbage or empty input.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);

} // namespace sdisp
