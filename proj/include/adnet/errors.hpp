#pragma once

#include <stdexcept>
#include <string>

namespace adnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class NotPsd : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// A randomized construction (e.g. a connected random graph) gave up.
class ConstructionFailure : public Error {
public:
    using Error::Error;
};

/// An iterative solver did not reach its tolerance within its budget.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class NumericFailure : public Error {
public:
    using Error::Error;
};

/// A simulated iterate became non-finite.
class Divergence : public NumericFailure {
public:
    Divergence(const std::string& what, long iteration)
        : NumericFailure(what), iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// Malformed or incomplete experiment configuration.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace adnet
