#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace finality {

/// Invalid argument to a probability primitive (negative rate, k > n, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A round or window lies outside the available trace, or the trace is too
/// short for the requested computation.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed trace input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trace rounds are not consecutive. Carries the first missing round.
class GapError : public FormatError {
 public:
  explicit GapError(std::int64_t missing_round)
      : FormatError("gap in trace: round " + std::to_string(missing_round) + " is missing"),
        missing_round_(missing_round) {}

  std::int64_t missing_round() const noexcept { return missing_round_; }

 private:
  std::int64_t missing_round_;
};

/// The observed chain is so unlikely under the configured block rate that
/// conditioning on it is numerically meaningless.
class DegenerateConditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace finality
