#pragma once

#include <stdexcept>
#include <string>

namespace thermogrid {

// Bad configuration or parameter block. `what()` starts with the field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside a function's input domain (negative irradiance, NaN, ...).
class InputDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Two artifacts that must agree do not (horizon, dimensions, scenario sets).
class InputMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite loss or reward during training.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace thermogrid
