#pragma once

#include <stdexcept>
#include <string>

namespace raceline {

/// Precondition violated by the caller (bad argument, out-of-range value).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares Bezier fit could not be solved (rank-deficient basis).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Track generation gave up after exhausting its retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A planned path did not reach far enough forward to fill the embedding.
class HorizonError : public std::runtime_error {
 public:
  HorizonError(const std::string& what, int steps_survived)
      : std::runtime_error(what), steps_survived_(steps_survived) {}

  int steps_survived() const noexcept { return steps_survived_; }

 private:
  int steps_survived_;
};

/// The embedding being tracked is older than the replanning interval allows.
class StalenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or config contents, or an I/O failure.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace raceline
