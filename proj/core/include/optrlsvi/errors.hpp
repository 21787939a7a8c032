#pragma once

#include <stdexcept>
#include <string>

namespace optrlsvi {

// Bad caller input: wrong dimensions, out-of-range indices, bad parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or a factorization that lost positive definiteness.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called on an object that does not satisfy its precondition.
class PreconditionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Agent episode protocol (plan, act/observe per timestep) was broken.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed serialized file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace optrlsvi
