#pragma once

#include <stdexcept>
#include <string>

namespace pmode {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad parameters: split ratios, sizes, k, schedules, missing files.
class InvalidConfig : public Error {
public:
  using Error::Error;
};

// Dimension mismatch between a point and a density or dataset.
class ShapeError : public Error {
public:
  using Error::Error;
};

// An estimator was asked to fit an empty sample.
class EmptyBlock : public Error {
public:
  using Error::Error;
};

// No analytic L2 inner product exists for the given pair of densities.
class NoClosedForm : public Error {
public:
  using Error::Error;
};

// Exhaustive search would exceed the configured enumeration cap.
class TooLarge : public Error {
public:
  using Error::Error;
};

// Malformed input file.
class FormatError : public Error {
public:
  using Error::Error;
};

// Empty or otherwise unusable metric input.
class InvalidInput : public Error {
public:
  using Error::Error;
};

class FitError : public Error {
public:
  using Error::Error;
};

} // namespace pmode
