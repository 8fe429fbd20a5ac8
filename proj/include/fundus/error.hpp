#pragma once

#include <stdexcept>
#include <string>

namespace fundus {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API misuse: a precondition or invariant was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// Bad user-supplied data (manifests, configs, prediction files).
class ValidationError : public ContractError {
public:
    using ContractError::ContractError;
};

// Syntax-level failure while reading a structured document.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line)
        : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

// Filesystem-level failure; carries the offending path in the message.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg, const std::string& path)
        : Error(msg + ": " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Unsupported or corrupt raster data.
class DecodeError : public Error {
public:
    explicit DecodeError(const std::string& msg, const std::string& path)
        : Error(msg + ": " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

} // namespace fundus
