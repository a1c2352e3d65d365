#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mlsi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid parameters or inputs violating an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Request exceeds what a routine supports (dimension, point count, grid size).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A discrete conjugate was queried outside the region where its sup is interior.
class OutOfTrustedRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, divergent integrals, singular matrices.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A grid search found no admissible parameter.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The instance lies outside the hypotheses of the inequality being checked.
/// Suites record these as skips rather than failures.
class OutOfScope : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vec vec1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

std::string to_string(const Vec& v);

}  // namespace mlsi
