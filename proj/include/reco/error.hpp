#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reco {

enum class ErrorKind {
    ZeroVector,
    EmptyClass,
    SingleClass,
    DimensionMismatch,
    EmptyNegatives,
    EmptyPool,
    ShapeMismatch,
    AllIgnored,
    Unsatisfiable,
    InvalidArgument,
    Config,
    Data,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// callers (tests, the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace reco
