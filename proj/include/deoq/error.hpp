#pragma once

#include <stdexcept>
#include <string>

namespace deoq {

/// Raised when an input violates a documented invariant. `field()` names the
/// offending parameter so callers (notably the CLI) can report it verbatim.
class InvalidParameter : public std::invalid_argument {
 public:
  InvalidParameter(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Every start of the envelope optimizer failed to produce a finite objective.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deoq
