#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tarn {

enum class Errc {
    InvalidAddress,
    InvalidPrefix,
    InvalidPool,
    LengthMismatch,
    OutOfSchedule,
    InsufficientData,
    EmptyAlphabet,
    InvalidAlphabet,
    InvalidModel,
    EmptyModel,
    AbsorbingState,
    VersionMismatch,
    DuplicateRule,
    UnknownAs,
    NotAnnounced,
    MoasConflict,
    PayloadTooLarge,
    MalformedRecord,
    IncompleteSet,
    IntegrityFailure,
    UnknownModel,
    ScheduleExhausted,
    ConfigError,
    EmptyInput,
    ParseError,
    InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace tarn
