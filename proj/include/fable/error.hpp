#pragma once

#include <stdexcept>
#include <string>

namespace fable {

/// Malformed or inconsistent input data (bad labels, ragged rows, missing fields).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values, failed factorizations, degenerate statistics.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fable
