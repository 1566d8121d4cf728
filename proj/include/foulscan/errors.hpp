#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace foulscan {

// Typed failure codes. Every error path in the library throws Error carrying
// one of these, so callers (and the CLI exit-code mapping) can switch on the
// kind instead of parsing messages.
enum class Errc {
    ZeroVector,
    NonFinite,
    InvalidK,
    InvalidArgument,
    DimMismatch,
    EmptyDataset,
    EmptySet,
    EmptyStream,
    InsufficientComponents,
    MissingClassData,
    NoPositives,
    LengthMismatch,
    OutOfRange,
    UnreachableRecall,
    InvalidRate,
    NonMonotoneTime,
    BadMagic,
    UnsupportedVersion,
    Truncated,
    SchemaMismatch,
    DuplicateId,
    LabelInconsistent,
    IoFailure,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::NonFinite: return "NonFinite";
        case Errc::InvalidK: return "InvalidK";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::EmptySet: return "EmptySet";
        case Errc::EmptyStream: return "EmptyStream";
        case Errc::InsufficientComponents: return "InsufficientComponents";
        case Errc::MissingClassData: return "MissingClassData";
        case Errc::NoPositives: return "NoPositives";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::OutOfRange: return "OutOfRange";
        case Errc::UnreachableRecall: return "UnreachableRecall";
        case Errc::InvalidRate: return "InvalidRate";
        case Errc::NonMonotoneTime: return "NonMonotoneTime";
        case Errc::BadMagic: return "BadMagic";
        case Errc::UnsupportedVersion: return "UnsupportedVersion";
        case Errc::Truncated: return "Truncated";
        case Errc::SchemaMismatch: return "SchemaMismatch";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::LabelInconsistent: return "LabelInconsistent";
        case Errc::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace foulscan
