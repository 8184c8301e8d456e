#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace useq {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit the operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an op (log of a non-positive value, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller broke an API precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

// Bad user input: empty corpus, single-class data, invalid configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CheckpointError : public Error {
public:
    enum class Kind { io, bad_magic, unsupported_version, truncated, malformed_header, manifest };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace useq
