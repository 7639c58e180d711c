#pragma once

#include <stdexcept>
#include <string>

namespace surgctx {

// Base of every error raised by the library. The CLI maps Error subclasses
// to exit code 2 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input geometry that cannot form a polygon (too few distinct points, NaN).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// An operation needed an object that is not present in the frame.
class AbsentObjectError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

// Malformed file, config, or rule text.
class DataError : public Error {
 public:
  using Error::Error;
};

// Segmentation was requested before the memory bank received its initial pair.
class UninitializedBankError : public Error {
 public:
  using Error::Error;
};

// Frame indices passed to a memory bank must strictly increase.
class FrameOrderError : public Error {
 public:
  using Error::Error;
};

}  // namespace surgctx
