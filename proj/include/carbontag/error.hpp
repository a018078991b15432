#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace carbontag {

enum class Errc {
    domain,
    schema,
    parse,
    config,
    io,
    feature_resolution,
    undefined_correlation,
    singularity,
    insufficient_data,
    empty_selection,
    integrity,
    version,
    size_budget,
    validation,
    unavailable,
    timeout,
};

const char* to_string(Errc code);

/// Base of every error raised by the library. The code selects the CLI exit
/// status and the HTTP status class.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(Errc::domain, what) {}
};

class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string column = {})
        : Error(Errc::schema, what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(Errc::parse, what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Errc::config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(Errc::io, what) {}
};

class FeatureResolutionError : public Error {
public:
    explicit FeatureResolutionError(std::string field)
        : Error(Errc::feature_resolution, "missing parameter: " + field), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class UndefinedCorrelationError : public Error {
public:
    explicit UndefinedCorrelationError(const std::string& what)
        : Error(Errc::undefined_correlation, what) {}
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::vector<std::string> dependent)
        : Error(Errc::singularity, what), dependent_(std::move(dependent)) {}
    const std::vector<std::string>& dependent_features() const noexcept { return dependent_; }

private:
    std::vector<std::string> dependent_;
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(Errc::insufficient_data, what) {}
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(Errc::integrity, what) {}
};

class VersionError : public Error {
public:
    explicit VersionError(const std::string& what) : Error(Errc::version, what) {}
};

class SizeBudgetError : public Error {
public:
    SizeBudgetError(std::size_t size, std::size_t budget);
    std::size_t size() const noexcept { return size_; }
    std::size_t overshoot() const noexcept { return size_ - budget_; }

private:
    std::size_t size_;
    std::size_t budget_;
};

/// Rejected service request (HTTP 400). `field` names the offending parameter.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::string field = {})
        : Error(Errc::validation, what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class UnavailableError : public Error {
public:
    explicit UnavailableError(const std::string& what) : Error(Errc::unavailable, what) {}
};

class TimeoutError : public Error {
public:
    explicit TimeoutError(const std::string& what) : Error(Errc::timeout, what) {}
};

}  // namespace carbontag
