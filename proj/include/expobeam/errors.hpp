#pragma once

#include <stdexcept>
#include <string>

namespace expobeam {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or overlapping geometry (coincident antennas, empty sampling set...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Field evaluated at a source point.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Polarization requested along the dipole axis.
class DegeneratePolarizationError : public Error {
public:
    using Error::Error;
};

/// Impedance matrix too ill-conditioned to invert.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Re(Z^-1) has no positive eigenvalue, so no drive radiates power.
class NonRadiatingError : public Error {
public:
    using Error::Error;
};

/// Bad argument to a numerical routine.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Configuration parse/validation failure. Carries the offending key and line (0 if unknown).
class ConfigError : public Error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : Error(what), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

}  // namespace expobeam
