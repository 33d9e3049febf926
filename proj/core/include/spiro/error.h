#ifndef SPIRO_ERROR_H_
#define SPIRO_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace spiro {

// Coarse error classes. The command-line tool maps these onto exit codes
// (config -> 2, data -> 3, numerical -> 4).
enum class ErrorKind { kConfig, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& message)
      : Error(ErrorKind::kConfig, std::move(module), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string module, const std::string& message)
      : Error(ErrorKind::kData, std::move(module), message) {}
};

// A malformed input row. `row` is the 1-based data row (header and comment
// lines are not counted).
class LoadError : public DataError {
 public:
  LoadError(std::string module, std::size_t row, const std::string& message)
      : DataError(std::move(module), message), row_(row) {}

  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class NumericalError : public Error {
 public:
  NumericalError(std::string module, const std::string& message)
      : Error(ErrorKind::kNumerical, std::move(module), message) {}
};

// Arguments outside the mathematical domain of a formula (non-positive
// volumes, negative power bases).
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace spiro

#endif  // SPIRO_ERROR_H_
