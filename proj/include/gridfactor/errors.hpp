#pragma once

#include <stdexcept>
#include <string>

namespace gridfactor {

// Input errors map to CLI exit code 1, analysis errors to exit code 2.
enum class ErrorKind { input, analysis };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::input, "parse error: " + what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::input, "validation error: " + what) {}
};

class UnknownEdgeError : public Error {
 public:
  explicit UnknownEdgeError(const std::string& what)
      : Error(ErrorKind::input, "unknown edge: " + what) {}
};

class UnbalancedInjectionError : public Error {
 public:
  explicit UnbalancedInjectionError(const std::string& what)
      : Error(ErrorKind::input, "unbalanced injection: " + what) {}
};

class DisconnectedError : public Error {
 public:
  explicit DisconnectedError(const std::string& what)
      : Error(ErrorKind::analysis, "disconnected network: " + what) {}
};

class SingularError : public Error {
 public:
  explicit SingularError(const std::string& what)
      : Error(ErrorKind::analysis, "singular matrix: " + what) {}
};

class TooLargeError : public Error {
 public:
  explicit TooLargeError(const std::string& what)
      : Error(ErrorKind::analysis, "enumeration too large: " + what) {}
};

/// Raised when a single-line outage factor is requested for a bridge.
class BridgeOutageError : public Error {
 public:
  explicit BridgeOutageError(const std::string& what)
      : Error(ErrorKind::analysis, "bridge outage: " + what) {}
};

class CutSetError : public Error {
 public:
  explicit CutSetError(const std::string& what)
      : Error(ErrorKind::analysis, "cut set outage: " + what) {}
};

class ZeroFactorError : public Error {
 public:
  explicit ZeroFactorError(const std::string& what)
      : Error(ErrorKind::analysis, "zero outage factor: " + what) {}
};

}  // namespace gridfactor
