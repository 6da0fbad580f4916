#pragma once

#include <stdexcept>
#include <string>

namespace nltl2p {

/// Bad arguments: wrong mode, mismatched shapes, out-of-range parameters.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration that cannot be satisfied (e.g. search window too small).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative numerical routine failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A derived object violates an invariant it must hold (e.g. zero coverage weight).
class IntegrityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The objective increased between outer iterations with a frozen plan.
class DescentViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable file contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nltl2p
