#pragma once

#include <stdexcept>
#include <string>

namespace qbatt {

// Base class for every recoverable failure the library reports. The CLI maps
// subclasses to exit codes, so new failure modes should derive from one of
// the categories below rather than throwing std::runtime_error directly.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operator/state dimensions or layouts do not match.
class InvalidDimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside its mathematical domain (negative rate, bad level index, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Requested occupation does not fit in the Fock truncation.
class TruncationError : public Error {
public:
    using Error::Error;
};

// A trajectory or sample set is too short for the requested analysis.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// A quantity that must be real (or Hermitian) drifted beyond tolerance.
class NumericalCorruptionError : public Error {
public:
    using Error::Error;
};

// Config file rejected; carries the offending field path.
class ConfigError : public Error {
public:
    ConfigError(std::string field_path, const std::string& message)
        : Error("config error at '" + field_path + "': " + message),
          field_path_(std::move(field_path)) {}

    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

// File could not be written or read.
class FileError : public Error {
public:
    using Error::Error;
};

}  // namespace qbatt
