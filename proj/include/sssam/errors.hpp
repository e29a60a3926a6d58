#pragma once

#include <stdexcept>
#include <string>

namespace sssam {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arithmetic partners of unequal length.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the operation's domain (probability, step index, batch index, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A function produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class FileError : public Error {
public:
    FileError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace sssam
