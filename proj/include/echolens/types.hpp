#ifndef ECHOLENS_TYPES_HPP
#define ECHOLENS_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace echolens {

/// Dense internal user id, contiguous from 0.
using UserId = std::uint32_t;

/// Week index counted from the configured epoch.
using WeekIndex = std::int32_t;

/// Sorted, duplicate-free list of user ids.
using IdSet = std::vector<UserId>;

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The quantity is undefined for this input (all-zero vector, zero variance, ...).
class UndefinedError : public Error {
public:
    using Error::Error;
};

/// Iterative numerical routine failed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage's upstream artifacts are missing or out of date.
class StaleArtifactError : public Error {
public:
    using Error::Error;
};

} // namespace echolens

#endif // ECHOLENS_TYPES_HPP
