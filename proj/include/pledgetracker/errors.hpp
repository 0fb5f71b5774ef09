#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pledgetracker {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FieldIssue {
    std::string field;
    std::string message;
};

/// Input rejected by a validation contract. Carries every offending field so
/// API callers can render them together.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(message), issues_{{std::move(field), message}} {}
    explicit ValidationError(std::vector<FieldIssue> issues);

    [[nodiscard]] const std::string& field() const { return issues_.front().field; }
    [[nodiscard]] const std::vector<FieldIssue>& issues() const { return issues_; }

private:
    std::vector<FieldIssue> issues_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Operation not allowed in the current state (e.g. feedback on a running job).
class ConflictError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or payload. `line` is 1-based when known.
class InputError : public Error {
public:
    InputError(const std::string& message, std::optional<std::size_t> line = std::nullopt);
    [[nodiscard]] std::optional<std::size_t> line() const { return line_; }

private:
    std::optional<std::size_t> line_;
};

/// LLM output that could not be turned into the expected structure.
class ParseError : public Error {
public:
    using Error::Error;
};

class NormalizationError : public Error {
public:
    NormalizationError(std::string expression, const std::string& message)
        : Error(message), expression_(std::move(expression)) {}
    [[nodiscard]] const std::string& expression() const { return expression_; }

private:
    std::string expression_;
};

/// A relative temporal phrase arrived without any anchor date.
class MissingAnchorError : public NormalizationError {
public:
    explicit MissingAnchorError(std::string expression)
        : NormalizationError(expression, "relative expression needs an anchor date: '" + expression + "'") {}
};

enum class ProviderErrorKind {
    transport,       // retryable
    rate_limited,    // retryable, honours retry_after
    empty_response,  // provider returned nothing usable
    not_found,
    scrape_failed,   // non-HTML, empty extraction, ...
    invalid_request,
};

class ProviderError : public Error {
public:
    ProviderError(ProviderErrorKind kind, const std::string& message,
                  std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
        : Error(message), kind_(kind), retry_after_(retry_after) {}

    [[nodiscard]] ProviderErrorKind kind() const { return kind_; }
    [[nodiscard]] std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }
    [[nodiscard]] bool retryable() const {
        return kind_ == ProviderErrorKind::transport || kind_ == ProviderErrorKind::rate_limited;
    }

private:
    ProviderErrorKind kind_;
    std::optional<std::chrono::milliseconds> retry_after_;
};

const char* to_string(ProviderErrorKind kind);

}  // namespace pledgetracker
