#pragma once

#include <stdexcept>
#include <string>

namespace balancelab {

/// Malformed arguments, inputs, or configuration. The CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative numerical kernel failed to reach its tolerance. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sampling or search budget ran out before the request was satisfied. CLI exit code 4.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace balancelab
