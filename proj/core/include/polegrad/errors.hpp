#pragma once

#include <stdexcept>
#include <string>

namespace polegrad {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad value passed to an operation (sizes, ranges, arity, config fields).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Use of a handle that was never allocated or has been freed.
class DanglingHandle : public Error {
 public:
  using Error::Error;
};

// Dispatch with a function index that is not in the table.
class UnknownFunction : public Error {
 public:
  using Error::Error;
};

// Structural problem in a network definition or its wiring.
class ModelError : public Error {
 public:
  using Error::Error;
};

// A data-producing layer was asked to run with an empty queue.
class DataStarvation : public Error {
 public:
  using Error::Error;
};

// Malformed binary payload (weight snapshots and similar).
class FormatError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// Operation is not valid for the object's current state.
class InvalidState : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed; line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Dataset files could not be loaded; line() is 1-based within the index file.
class LoadError : public Error {
 public:
  LoadError(int line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace polegrad
