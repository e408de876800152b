#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>

namespace settrig {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Numerical tolerances shared by all set and LP computations.
/// feas_tol is the slack allowed on constraint satisfaction; rank_tol is the
/// threshold below which pivots / row differences count as degenerate.
struct Tolerance {
  double feas_tol = 1e-7;
  double rank_tol = 1e-9;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotCSet : public Error {
 public:
  using Error::Error;
};

class NegativeScale : public Error {
 public:
  using Error::Error;
};

class UnboundedSet : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class MalformedProgram : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class NotContractive : public Error {
 public:
  using Error::Error;
};

class EmptyIterate : public Error {
 public:
  using Error::Error;
};

class StateOutsideS : public Error {
 public:
  using Error::Error;
};

class EmptyCandidates : public Error {
 public:
  using Error::Error;
};

class DecompositionFailed : public Error {
 public:
  using Error::Error;
};

class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

// Stacks matrices on top of each other. All blocks must agree on column count;
// zero-row blocks are allowed.
inline Matrix vstack(std::initializer_list<std::reference_wrapper<const Matrix>> blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  for (const Matrix& b : blocks) {
    rows += b.rows();
    if (b.rows() > 0) {
      if (cols >= 0 && b.cols() != cols) throw DimensionMismatch("vstack: column mismatch");
      cols = b.cols();
    }
  }
  if (cols < 0) cols = 0;
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Matrix& b : blocks) {
    if (b.rows() > 0) out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

inline Vector vconcat(std::initializer_list<std::reference_wrapper<const Vector>> parts) {
  Eigen::Index n = 0;
  for (const Vector& p : parts) n += p.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const Vector& p : parts) {
    if (p.size() > 0) out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace detail

}  // namespace settrig
