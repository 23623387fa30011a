#pragma once

#include <stdexcept>
#include <string>

namespace lhsim {

/// Raised for invalid parameters, mismatched dimensions and other contract violations.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a file cannot be read, decoded or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lhsim
