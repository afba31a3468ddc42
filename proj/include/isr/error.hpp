#pragma once

#include <stdexcept>
#include <string>

namespace isr {

/// Failure category, mapped one-to-one onto CLI exit codes.
enum class ErrorCategory {
  Config = 2,
  Geometry = 3,
  Convergence = 4,
  Io = 5,
  InvalidArgument = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::Config, what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what)
      : Error(ErrorCategory::Geometry, what) {}
};

/// A hexahedron or surface patch with non-positive Jacobian determinant.
class InvertedElementError : public GeometryError {
 public:
  InvertedElementError(int element, const std::string& what)
      : GeometryError(what), element_(element) {}
  int element() const { return element_; }

 private:
  int element_;
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorCategory::Convergence, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCategory::InvalidArgument, what) {}
};

}  // namespace isr
