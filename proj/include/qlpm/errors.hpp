#ifndef QLPM_ERRORS_HPP
#define QLPM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qlpm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical quadrature failed to reach the requested tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& msg, double achieved, double requested)
        : Error(msg + " (achieved " + std::to_string(achieved) + ", requested " +
                std::to_string(requested) + ")"),
          achieved_error(achieved), requested_error(requested) {}
    double achieved_error;
    double requested_error;
};

/// Signal does not support the requested number of exponential modes.
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

/// Recovered exponent oscillates at or above the Nyquist rate of the grid.
class AliasingError : public Error {
public:
    using Error::Error;
};

/// Operator or superoperator dimension exceeds a configured cap.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator step size underflowed (typically an unstable generator).
class StepUnderflowError : public Error {
public:
    StepUnderflowError(const std::string& msg, double t_failure)
        : Error(msg + " at t = " + std::to_string(t_failure)), t(t_failure) {}
    double t;
};

} // namespace qlpm

#endif
