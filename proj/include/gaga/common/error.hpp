#pragma once

#include <stdexcept>
#include <string>

namespace gaga {

// Base for every error the library raises. The CLI maps subclasses to exit
// codes (see cli/stages.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (non-scalar loss, n < 2, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, int http_status = 0)
      : Error(what), http_status_(http_status) {}
  int http_status() const noexcept { return http_status_; }

 private:
  int http_status_;
};

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace gaga
