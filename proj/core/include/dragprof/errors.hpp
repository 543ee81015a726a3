#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dragprof {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// heap

class OutOfMemory : public Error {
 public:
  OutOfMemory(std::size_t requested, std::size_t capacity);
  std::size_t requested() const { return requested_; }

 private:
  std::size_t requested_;
};

class IndexOutOfBounds : public Error {
 public:
  using Error::Error;
};

class NegativeLength : public Error {
 public:
  using Error::Error;
};

/// A Ref whose object was already collected. Always an interpreter or
/// collector bug, never a user error.
class DanglingRef : public Error {
 public:
  using Error::Error;
};

// gc

class ToSpaceOverflow : public Error {
 public:
  using Error::Error;
};

// profiler

class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class UnknownId : public Error {
 public:
  using Error::Error;
};

/// Malformed DRAGLOG input; carries the 1-based line number.
class LogFormatError : public Error {
 public:
  LogFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// interp

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Unbound variable, type error, arity error.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace dragprof
