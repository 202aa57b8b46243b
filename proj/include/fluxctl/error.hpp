#pragma once

#include <stdexcept>
#include <string>

namespace fluxctl {

enum class ErrorKind {
  config,     // malformed or invalid run configuration
  numerical,  // solver breakdown, divergence, non-finite values
  domain,     // argument outside a function's admissible range
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string const& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class ConfigErrorCode { syntax, unknown_section, unknown_key, duplicate_key, malformed_number, invalid_value };

/// Configuration problem, tagged with the 1-based line it was found on (0 if
/// it concerns the file as a whole).
class ConfigError : public Error {
 public:
  ConfigError(ConfigErrorCode code, int line, std::string const& what)
      : Error(ErrorKind::config, line > 0 ? "line " + std::to_string(line) + ": " + what : what), code_(code), line_(line)
  {
  }
  ConfigErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ConfigErrorCode code_;
  int line_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(std::string const& what) : Error(ErrorKind::numerical, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(std::string const& what) : Error(ErrorKind::domain, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string const& what) : Error(ErrorKind::io, what) {}
};

}  // namespace fluxctl
