#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lobfeat {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (too short, wrong shape, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or non-conforming input file. `line` is 1-based; 0 when the
/// error is not tied to one line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Book replay hit an event it cannot apply under the strict policy.
class ReplayError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; `stage` names it for the diagnostics.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lobfeat
