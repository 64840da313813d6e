#pragma once

#include <stdexcept>
#include <string>

namespace swarmnet {

/// Base class for every failure raised by the library. Protocol-level
/// rejections are not exceptions; see protocol.hpp.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A trace longer than the trained pad length reached the verifier.
class PadOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace swarmnet
