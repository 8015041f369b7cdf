#pragma once

#include <stdexcept>
#include <string>

namespace mimfd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (alpha >= 1, empty
// rectangle, zero-norm reference field, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between fields, grids or matrices.
class DimensionError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// Linear solver failure (factorization breakdown or residual above tolerance).
class SolverError : public Error {
public:
    using Error::Error;
};

// Diffusion tensor not symmetric positive definite, or negative reaction.
class CoefficientError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mimfd
