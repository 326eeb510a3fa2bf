#pragma once

#include <stdexcept>
#include <string>

namespace condprob {

// Invalid parameter or precondition violation supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Lookup of a label (or other key) that the model has never seen.
class NotFoundError : public std::runtime_error {
 public:
  explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

// A fixed-capacity model ran out of slots.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace condprob
