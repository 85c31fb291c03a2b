#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mind {

enum class ErrorCode {
    // session
    EmptyConcern,
    InvalidOptions,
    InvalidInput,
    PhaseMismatch,
    SessionNotActive,
    RoundIndexMismatch,
    // templates / parsing
    MissingBinding,
    UnknownBinding,
    UnknownPlaceholder,
    TemplateNotFound,
    MissingSection,
    UnknownIsEnd,
    UnknownDistortionType,
    UnknownLabel,
    RoundCountMismatch,
    ConfigError,
    // backend
    AuthMissing,
    Timeout,
    TransportError,
    ProviderError,
    NoScriptMatch,
    IncompleteTranscript,
    // eval
    InvalidScore,
    MissingItem,
    EmptyGroup,
    EmptyInput,
    MixedDimensionSets,
    DataError,
    PreconditionViolation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a code; `role()` names the
/// agent whose call failed when the error crossed an agent boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail, std::string role = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& role() const noexcept { return role_; }

    bool is_parse_error() const noexcept;

    Error with_role(std::string role) const;

private:
    ErrorCode code_;
    std::string detail_;
    std::string role_;
};

} // namespace mind
