#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anidmp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateElement : public Error {
public:
  using Error::Error;
};

class ZeroVector : public Error {
public:
  using Error::Error;
};

class NotSPD : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class UnknownDomain : public Error {
public:
  using Error::Error;
};

class UnknownCase : public Error {
public:
  using Error::Error;
};

class SolverBreakdown : public Error {
public:
  using Error::Error;
};

class MissingExact : public Error {
public:
  using Error::Error;
};

class PatchTooSmall : public Error {
public:
  using Error::Error;
};

class BisectionFailure : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace anidmp
