#pragma once

#include <stdexcept>
#include <string>

namespace dpkit {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell index outside the array shape.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Non-finite cell value.
class ValueError : public Error {
 public:
  using Error::Error;
};

// A read touched a cell that has never been written. This almost always means
// the recurrence is evaluated in the wrong order.
class EvaluationOrderError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// Malformed or invariant-violating trace / instance document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Operation not legal in the current session state (e.g. stale question).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Oracle asked to enumerate a search space beyond its size bound.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpkit
