#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace greedyqn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quadratic form that must be nonnegative came out negative.
class NotPositiveSemidefinite : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  explicit NotPositiveDefinite(const std::string& what) : Error(what) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_ = 0;
};

/// A low-rank factor update would destroy positive definiteness.
class DegenerateUpdate : public Error {
 public:
  DegenerateUpdate(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// SR1 called with G not dominating A along the chosen direction.
class OrderingViolated : public Error {
 public:
  using Error::Error;
};

class InvalidOracle : public Error {
 public:
  using Error::Error;
};

class DegenerateStepsize : public Error {
 public:
  using Error::Error;
};

class DiagnosticGate : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::size_t record)
      : Error(what), record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LineSearchFailure : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

}  // namespace greedyqn
