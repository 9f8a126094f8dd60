#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

/// Base class for every failure raised by the solver library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the inputs (dimensions, signs, grid sizes) does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// dt is too coarse for the per-node implicit iteration to contract.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// An iterative procedure ran out of iterations.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A configuration file could not be parsed or is missing a field.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rbsde
