#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace chartlab {

using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Ground-truth positions or chart coordinates, one row per datapoint.
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Malformed input data or parameters that do not fit the data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An optimizer or numerical routine failed (divergence, NaN, no bracket).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Automatic scale calibration could not find a usable value; the caller
/// should supply one explicitly.
class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace chartlab
