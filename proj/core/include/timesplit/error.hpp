#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace timesplit {

// Runtime failure during a pipeline step. Maps to CLI exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or malformed input data. Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Parse failure in a structured text input, carrying the byte offset of the
// offending character.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Config validation collects every problem before failing so the user sees
// them all at once.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace timesplit
