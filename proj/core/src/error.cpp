#include "tarn/error.hpp"

namespace tarn {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidAddress: return "InvalidAddress";
    case Errc::InvalidPrefix: return "InvalidPrefix";
    case Errc::InvalidPool: return "InvalidPool";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::OutOfSchedule: return "OutOfSchedule";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptyAlphabet: return "EmptyAlphabet";
    case Errc::InvalidAlphabet: return "InvalidAlphabet";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::EmptyModel: return "EmptyModel";
    case Errc::AbsorbingState: return "AbsorbingState";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::DuplicateRule: return "DuplicateRule";
    case Errc::UnknownAs: return "UnknownAs";
    case Errc::NotAnnounced: return "NotAnnounced";
    case Errc::MoasConflict: return "MoasConflict";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::IncompleteSet: return "IncompleteSet";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::ScheduleExhausted: return "ScheduleExhausted";
    case Errc::ConfigError: return "ConfigError";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

} // namespace tarn
