#pragma once

#include <stdexcept>
#include <string>

namespace opls {

/// Malformed or inconsistent user input (model file, data, arguments).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical precondition failed: domain violations, singular systems,
/// degenerate tables.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative procedure did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace opls
