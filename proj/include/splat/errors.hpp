#pragma once

#include <stdexcept>
#include <string>

namespace splat {

// Violated operation contract: bad arguments, mismatched shapes, non-finite input.
class InvalidInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config file or parameter-range problem. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset missing, malformed, or empty after association. CLI exit code 3.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric evaluation cannot proceed (too few pairs, no valid pixels).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace splat
