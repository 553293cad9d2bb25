#pragma once

#include <stdexcept>
#include <string>

namespace pcdm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or law/config string. Carries the offending line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite objective during a solve. Signals a mis-specified ESO certificate.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcdm
