#pragma once

#include <stdexcept>
#include <string>

namespace percweb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad spec, bad probability, bad scale).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operation is not defined for the given lattice kind.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Request would blow up (enumeration over too many elements).
class SizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace percweb
