#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnpseg {

// Malformed or inconsistent input data (files, label vectors, rasters).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse failure with a 1-based line number into the offending file.
class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& detail,
             const std::string& source = {})
      : InputError((source.empty() ? "" : source + ": ") + "line " +
                   std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Invalid model or sampler configuration (hyperparameters, infeasible init).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bnpseg
