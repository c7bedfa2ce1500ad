#pragma once

#include <stdexcept>
#include <string>

namespace deepir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor, field or image dimensions do not agree with an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A binary file (weights, feature dump, field dump) or image is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain (epsilon, alpha, dims...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown, e.g. a non-finite loss during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepir
