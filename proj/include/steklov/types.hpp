#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace steklov {

using Complex = std::complex<double>;

using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

// Compressed sparse row storage.
using RealSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using ComplexSparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Non-positive pivot while factorizing a matrix expected to be SPD.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is (numerically) singular.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The multigrid cluster could not be followed to the next level.
class TrackingError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry (element with non-positive area).
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace steklov
