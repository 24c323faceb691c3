#include "sdisp/io_util.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sdisp/error.hpp"

namespace sdisp {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::kIo: return "io";
    case Errc::kFormat: return "format";
    case Errc::kParse: return "parse";
    case Errc::kGap: return "gap";
    case Errc::kDomain: return "domain";
    case Errc::kDegenerate: return "degenerate";
    case Errc::kInsufficientSample: return "insufficient-sample";
    case Errc::kCollinearity: return "collinearity";
    case Errc::kAlignment: return "alignment";
    case Errc::kThinCrossSection: return "thin-cross-section";
    case Errc::kIncompleteMonth: return "incomplete-month";
    case Errc::kValidation: return "validation";
    }
    return "unknown";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::kIo, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) raise(Errc::kIo, "read failed on '" + path + "'");
    return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::kIo, "cannot create '" + path + "'");
    out.write(contents.data(), std::streamsize(contents.size()));
    if (!out) raise(Errc::kIo, "write failed on '" + path + "'");
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == delim) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_int(std::string_view s, int& out) {
    s = trim(s);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

} // namespace sdisp
