#ifndef MATPOP_ERRORS_HPP
#define MATPOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace matpop {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coefficient functions violate a structural hypothesis of the model.
struct ValidationError : Error {
    using Error::Error;
};

/// Adaptive quadrature could not meet its tolerance.
struct QuadratureError : Error {
    QuadratureError(const std::string& msg, double a, double b)
        : Error(msg), lo(a), hi(b) {}
    double lo, hi;  // worst subinterval
};

/// Root bracketing or iteration failure.
struct RootFindError : Error {
    using Error::Error;
};

/// Picard iteration failed (window shrank below one step, cap exceeded, ...).
struct SolverError : Error {
    using Error::Error;
};

/// Scenario file malformed or semantically invalid.
struct ScenarioError : Error {
    using Error::Error;
};

}  // namespace matpop

#endif
