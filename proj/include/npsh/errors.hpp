#pragma once

#include <stdexcept>
#include <string>

namespace npsh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMetricError : public Error {
public:
    SingularMetricError() : Error("metric not invertible") {}
};

/// A form or metric left the positive cone.
class ConeError : public Error {
public:
    using Error::Error;
};

class FieldIoError : public Error {
public:
    FieldIoError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Inner Krylov solve hit its iteration cap.
class LinearSolveError : public Error {
public:
    using Error::Error;
};

/// The continuity path could not be followed (dt fell below the floor).
class ContinuationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace npsh
