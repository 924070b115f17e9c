#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace coachsim {

/// Coarse error taxonomy shared by the library, the CLI and the HTTP API.
enum class ErrorCode { NotFound, Conflict, Validation, Upstream, Internal };

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, std::string const & message, std::string detail = {});

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::string const & detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

/// Bad or missing configuration / data files.
class ConfigError : public Error
{
public:
    explicit ConfigError(std::string const & message, std::string detail = {})
    : Error(ErrorCode::Validation, message, std::move(detail))
    { }
};

class ValidationError : public Error
{
public:
    explicit ValidationError(std::string const & message, std::string detail = {})
    : Error(ErrorCode::Validation, message, std::move(detail))
    { }
};

/// Operation not allowed in the current lifecycle state.
class StateError : public Error
{
public:
    explicit StateError(std::string const & message)
    : Error(ErrorCode::Conflict, message)
    { }
};

class NotFoundError : public Error
{
public:
    explicit NotFoundError(std::string const & message)
    : Error(ErrorCode::NotFound, message)
    { }
};

/// Malformed serialized document. `index` is the first offending turn, if any.
class FormatError : public Error
{
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit FormatError(std::string const & message, std::size_t index = npos)
    : Error(ErrorCode::Validation, message)
    , index_(index)
    { }

    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Retryable provider failure: connection problems, timeouts, 5xx, 429.
class TransportError : public Error
{
public:
    explicit TransportError(std::string const & message, std::string detail = {})
    : Error(ErrorCode::Upstream, message, std::move(detail))
    { }
};

/// Non-retryable provider failure (4xx, unscripted mock request).
class RequestError : public Error
{
public:
    explicit RequestError(std::string const & message, std::string detail = {})
    : Error(ErrorCode::Upstream, message, std::move(detail))
    { }
};

/// The LLM output could not be turned into a usable artifact.
class GenerationError : public Error
{
public:
    explicit GenerationError(std::string const & message, std::string detail = {})
    : Error(ErrorCode::Upstream, message, std::move(detail))
    { }
};

/// A judge or verifier response did not follow its grammar. Carries the raw text.
class ParseError : public Error
{
public:
    ParseError(std::string const & message, std::string raw)
    : Error(ErrorCode::Validation, message, std::move(raw))
    { }

    [[nodiscard]] std::string const & raw() const noexcept { return detail(); }
};

class EmptyInputError : public Error
{
public:
    explicit EmptyInputError(std::string const & message)
    : Error(ErrorCode::Validation, message)
    { }
};

} // namespace coachsim
