#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

// Usage-class failures (bad arguments, bad configuration, out-of-model
// inputs) derive from std::invalid_argument / std::domain_error and map to
// CLI exit code 2. Failures discovered while computing derive from
// std::runtime_error and map to exit code 3.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A configuration that is valid field-by-field but cannot be run, e.g. an
// integration step too coarse for the wall geometry.
class ConfigurationError : public std::invalid_argument {
public:
    ConfigurationError(std::string field, const std::string& what)
        : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    explicit ConfigurationError(const std::string& what) : ConfigurationError({}, what) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class SingularInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inputs outside the validity range of a physical model (e.g. near resonance).
class ModelDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyModeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridCoverageError : public NumericalError {
public:
    GridCoverageError(const std::string& what, double inside_fraction)
        : NumericalError(what), inside_fraction_(inside_fraction) {}

    double inside_fraction() const noexcept { return inside_fraction_; }

private:
    double inside_fraction_;
};

class CalibrationFailure : public NumericalError {
public:
    CalibrationFailure(const std::string& what, double tau_low_edge, double tau_high_edge)
        : NumericalError(what), tau_low_edge_(tau_low_edge), tau_high_edge_(tau_high_edge) {}

    // Coherence times at the two bracket endpoints (s; +inf if no decay).
    double tau_low_edge() const noexcept { return tau_low_edge_; }
    double tau_high_edge() const noexcept { return tau_high_edge_; }

private:
    double tau_low_edge_;
    double tau_high_edge_;
};

}  // namespace qmem
