#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace land {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Observations stored one per row (N x D).
using DataMatrix = Eigen::MatrixXd;

/// Raised when a numerical procedure cannot produce a usable result
/// (all Monte Carlo samples diverged, too many failed logarithm maps, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace land
