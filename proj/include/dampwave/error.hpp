#pragma once

#include <stdexcept>
#include <string>

namespace dampwave {

// Base for every error raised by the toolkit. Subclasses map onto the CLI
// exit codes (config 4, solver 3, validation 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised by the coefficient expression parser. Carries the offending token
// and its 1-based column.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& message, std::string token, int column)
        : ConfigError(message + " at column " + std::to_string(column) + " (token '" + token + "')"),
          token_(std::move(token)), column_(column) {}

    const std::string& token() const noexcept { return token_; }
    int column() const noexcept { return column_; }

private:
    std::string token_;
    int column_;
};

class CoefficientError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& message, double best_residual)
        : Error(message + " (best residual " + std::to_string(best_residual) + ")"),
          best_residual_(best_residual) {}

    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace dampwave
