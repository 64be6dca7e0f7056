#pragma once
#include <stdexcept>
#include <string>

namespace fol {

// Error taxonomy mirrored by the CLI's exit codes: ValidationError -> 2,
// DataMismatchError -> 3, NumericalError -> 4.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataMismatchError : public std::runtime_error {
 public:
  explicit DataMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fol
