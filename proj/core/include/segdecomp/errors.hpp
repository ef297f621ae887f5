#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace segdecomp {

/// Invalid configuration: bad experiment file, bad decomposer parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be used: malformed files, empty corpora, bad streams.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failures: unreadable input, unwritable output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training or evaluation step failed for a reason other than bad input.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Unbalanced begin/end activity annotations.
class AnnotationError : public DataError {
 public:
  AnnotationError(std::string label, std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what + " '" + label + "'"),
        label_(std::move(label)),
        line_(line) {}

  const std::string& label() const noexcept { return label_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string label_;
  std::size_t line_;
};

}  // namespace segdecomp
