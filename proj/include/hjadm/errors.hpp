#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hjadm {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the 0-based character position.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownFunction : public SyntaxError {
public:
    UnknownFunction(const std::string& name, std::size_t offset)
        : SyntaxError("unknown function '" + name + "'", offset), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnboundVariable : public Error {
public:
    explicit UnboundVariable(const std::string& name)
        : Error("unbound variable '" + name + "'"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// sqrt of a negative, division by zero, log of a non-positive, ...
/// `subexpression` is the printed form of the node that failed.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string subexpression)
        : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

/// Numerical failure of a pipeline stage (exit code 2 in the CLI).
class NumericalError : public Error {
public:
    using Error::Error;
};

class NodeCapExceeded : public NumericalError {
public:
    NodeCapExceeded(std::size_t size, std::size_t cap)
        : NumericalError("expression node cap exceeded (" + std::to_string(size) + " > " +
                         std::to_string(cap) + ")"),
          size_(size), cap_(cap) {}
    std::size_t size() const noexcept { return size_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t size_;
    std::size_t cap_;
};

class CflViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Bad problem or run configuration (exit code 1 in the CLI).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hjadm
