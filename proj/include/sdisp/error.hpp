#pragma once

#include <stdexcept>
#include <string>

namespace sdisp {

// Error taxonomy shared across the pipeline. The CLI maps these onto exit
// codes (validation -> 1, data -> 2, degenerate statistic -> 3).
enum class Errc {
    kIo,
    kFormat,
    kParse,
    kGap,
    kDomain,
    kDegenerate,
    kInsufficientSample,
    kCollinearity,
    kAlignment,
    kThinCrossSection,
    kIncompleteMonth,
    kValidation,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

const char* errc_name(Errc code) noexcept;

} // namespace sdisp
