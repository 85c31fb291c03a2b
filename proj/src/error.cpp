#include "mind/error.hpp"

namespace mind {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::EmptyConcern: return "EmptyConcern";
    case ErrorCode::InvalidOptions: return "InvalidOptions";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::PhaseMismatch: return "PhaseMismatch";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::RoundIndexMismatch: return "RoundIndexMismatch";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::UnknownBinding: return "UnknownBinding";
    case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::TemplateNotFound: return "TemplateNotFound";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::UnknownIsEnd: return "UnknownIsEnd";
    case ErrorCode::UnknownDistortionType: return "UnknownDistortionType";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::RoundCountMismatch: return "RoundCountMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::NoScriptMatch: return "NoScriptMatch";
    case ErrorCode::IncompleteTranscript: return "IncompleteTranscript";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::MissingItem: return "MissingItem";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MixedDimensionSets: return "MixedDimensionSets";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& detail, const std::string& role)
{
    std::string msg(to_string(code));
    if (!detail.empty()) {
        msg += ": " + detail;
    }
    if (!role.empty()) {
        msg += " [" + role + "]";
    }
    return msg;
}

} // namespace

Error::Error(ErrorCode code, std::string detail, std::string role)
    : std::runtime_error(compose(code, detail, role)),
      code_(code),
      detail_(std::move(detail)),
      role_(std::move(role))
{
}

bool Error::is_parse_error() const noexcept
{
    switch (code_) {
    case ErrorCode::MissingSection:
    case ErrorCode::UnknownIsEnd:
    case ErrorCode::UnknownDistortionType:
    case ErrorCode::RoundCountMismatch:
        return true;
    default:
        return false;
    }
}

Error Error::with_role(std::string role) const
{
    return Error(code_, detail_, std::move(role));
}

} // namespace mind
