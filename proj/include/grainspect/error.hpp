#ifndef GRAINSPECT_ERROR_HPP
#define GRAINSPECT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace grainspect {

// Bad input data: unreadable files, malformed annotations, infeasible splits.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown, e.g. a covariance that stays singular after the ridge.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grainspect

#endif  // GRAINSPECT_ERROR_HPP
