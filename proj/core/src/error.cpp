#include "survbv/error.hpp"

namespace survbv {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NoEvents: return "NoEvents";
        case ErrorKind::NoComparablePairs: return "NoComparablePairs";
        case ErrorKind::Diverged: return "Diverged";
        case ErrorKind::DegenerateFold: return "DegenerateFold";
        case ErrorKind::TooFewReplicates: return "TooFewReplicates";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::TooManyDegenerateDraws: return "TooManyDegenerateDraws";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::EmptyAfterFiltering: return "EmptyAfterFiltering";
        case ErrorKind::CalibrationFailed: return "CalibrationFailed";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace survbv
