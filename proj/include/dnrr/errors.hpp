#pragma once

#include <stdexcept>
#include <string>

namespace dnrr {

// Violated precondition of a public operation (dimension mismatch, bad index,
// malformed parameter).
class ContractViolation : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure during sampling or estimation.
class NumericError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

// The weighted design matrix of the theta update is singular.
class RankDeficiency : public NumericError {
 public:
    using NumericError::NumericError;
};

// Simulation could not produce a bounded realization within its retry budget.
class RetryExhausted : public NumericError {
 public:
    using NumericError::NumericError;
};

class IoError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

class ParseError : public IoError {
 public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : IoError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

 private:
    std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

}  // namespace dnrr
