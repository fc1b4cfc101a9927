#pragma once

#include <stdexcept>
#include <string>

namespace cqt {

/// Invalid input: bad dimensions, out-of-range parameters, violated invariants.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine did not reach its tolerance.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

}  // namespace cqt
