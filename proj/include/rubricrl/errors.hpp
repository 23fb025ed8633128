#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace rubricrl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Input data that cannot be used. CLI exit code 4.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// A backend could not produce a completion. CLI exit code 3.
class BackendError : public Error {
public:
    using Error::Error;
};

// Scripted fixture has no entry for the requested key.
class FixtureError : public BackendError {
public:
    using BackendError::BackendError;
};

// Remote endpoint failed after the retry budget was spent.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int attempts);
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// Remote endpoint answered with a non-2xx status.
class ProtocolError : public TransportError {
public:
    ProtocolError(const std::string& what, int status, int attempts);
    int status() const noexcept { return status_; }

private:
    int status_;
};

} // namespace rubricrl
