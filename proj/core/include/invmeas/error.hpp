#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace invmeas {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coefficient, drift or ellipticity requirement is violated at a point.
class CoefficientError : public Error {
public:
    using Error::Error;
};

/// Evaluation was requested inside a declared singular region without opt-in.
class SingularityRefused : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// A discrete density or solution took a non-positive value.
class PositivityFailure : public Error {
public:
    PositivityFailure(const std::string& what, int vertex, double value)
        : Error(what), vertex_(vertex), value_(value) {}
    int vertex() const { return vertex_; }
    double value() const { return value_; }

private:
    int vertex_;
    double value_;
};

/// The ball schedule was exhausted before the Cauchy criterion was met.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> deltas)
        : Error(what), deltas_(std::move(deltas)) {}
    const std::vector<double>& deltas() const { return deltas_; }

private:
    std::vector<double> deltas_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line) : Error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace invmeas
