#include "coachsim/error.hpp"

namespace coachsim {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Conflict: return "CONFLICT";
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::Upstream: return "UPSTREAM";
    case ErrorCode::Internal: return "INTERNAL";
    }
    return "INTERNAL";
}

Error::Error(ErrorCode code, std::string const & message, std::string detail)
: std::runtime_error(message)
, code_(code)
, detail_(std::move(detail))
{ }

} // namespace coachsim
