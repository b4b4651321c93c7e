#pragma once

#include <stdexcept>
#include <string>

namespace owdisc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or truncated input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments or data that violate a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage failed; carries the stage name for reporting.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace owdisc
