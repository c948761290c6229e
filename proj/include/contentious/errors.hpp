#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contentious {

// Base for every error the library raises; callers that only care about
// "something went wrong in the pipeline" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed resource or sidecar file. Carries the 1-based line number when
// one is known (0 otherwise).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line_no = 0)
      : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

// Invalid configuration (empty keyword list, bad API key, bad limits, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Data that violates a precondition (empty corpus, single-class labels,
// non-finite features, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// External scoring service failed in a way that cannot be recovered.
class ServiceError : public Error {
 public:
  using Error::Error;
};

}  // namespace contentious
