#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ltvid {

// Base of every error thrown by the library. `kind()` is a stable
// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension"; }
};

// Non-finite values, malformed files, unparsable numbers.
class DataError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "data"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config"; }
};

class InvalidRegularizerError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_regularizer"; }
};

// Raised when a least-squares problem has no unique solution. The columns of
// `directions()` span the null space of the regressor in parameter space.
class IllPosedError : public Error {
public:
    IllPosedError(const std::string& what, Eigen::MatrixXd directions)
        : Error(what), directions_(std::move(directions)) {}
    const char* kind() const noexcept override { return "ill_posed"; }
    const Eigen::MatrixXd& directions() const noexcept { return directions_; }

private:
    Eigen::MatrixXd directions_;
};

// Generated data left the representable range.
class InstabilityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "unstable"; }
};

}  // namespace ltvid
