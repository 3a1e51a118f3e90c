#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carpenter {

/// A violated mathematical precondition or hypothesis. Maps to CLI exit code 2.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or malformed input/artifact. Maps to CLI exit code 3.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// A 2x2 move whose target is not bracketed by the pair's current values.
class BracketingError : public DomainError {
public:
  BracketingError(std::size_t step, double current, double feed, double target);

  std::size_t step() const noexcept { return step_; }
  double current() const noexcept { return current_; }
  double feed() const noexcept { return feed_; }
  double target() const noexcept { return target_; }

private:
  std::size_t step_;
  double current_;
  double feed_;
  double target_;
};

/// Prefixes an error message with the name of the pipeline stage that raised it.
[[noreturn]] void rethrow_with_stage(const std::string& stage);

} // namespace carpenter
