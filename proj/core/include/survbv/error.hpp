#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace survbv {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    NoEvents,
    NoComparablePairs,
    Diverged,
    DegenerateFold,
    TooFewReplicates,
    EmptyInput,
    InsufficientData,
    TooManyDegenerateDraws,
    ParseError,
    SchemaError,
    EmptyAfterFiltering,
    CalibrationFailed,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. Every failure raised by survbv carries a kind so
/// callers (the harness, the CLI) can route it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Numerical failures (as opposed to bad input data).
    bool is_numerical() const noexcept {
        return kind_ == ErrorKind::Diverged || kind_ == ErrorKind::DegenerateFold ||
               kind_ == ErrorKind::CalibrationFailed ||
               kind_ == ErrorKind::TooManyDegenerateDraws;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace survbv
