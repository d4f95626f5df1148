#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "steklov/types.hpp"

namespace steklov {

// ---------------------------------------------------------------------------
// Sparse SPD factorization
// ---------------------------------------------------------------------------

/// Sparse Cholesky factor of a real SPD matrix. Copies share the factor,
/// which is read-only after construction.
class SpdFactor {
 public:
  SpdFactor() = default;
  /// Throws DefinitenessError on a non-positive pivot.
  explicit SpdFactor(const RealSparseMatrix& a);

  Eigen::Index dim() const { return dim_; }
  bool empty() const { return !impl_; }

  RVector solve(const RVector& b) const;
  /// Real and imaginary parts are solved independently.
  CVector solve(const CVector& b) const;
  CMatrix solve(const CMatrix& b) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  Eigen::Index dim_ = 0;
};

SpdFactor spd_factorize(const RealSparseMatrix& a);

// ---------------------------------------------------------------------------
// Krylov methods
// ---------------------------------------------------------------------------

using LinearOperator = std::function<CVector(const CVector&)>;

struct GmresOptions {
  double tol = 1e-12;  // relative to ‖rhs‖
  int max_iter = 1000;
  int restart = 80;
  /// When positive, also stop once the normwise backward error
  /// ‖r‖ / (matrix_norm ‖x‖ + ‖rhs‖) is below tol.
  double matrix_norm = 0.0;
};

struct GmresStats {
  int iterations = 0;
  double relative_residual = 0.0;
  double backward_error = 0.0;
  bool converged = false;
  bool breakdown = false;  // Krylov space became invariant
};

struct GmresResult {
  CVector x;
  GmresStats stats;
};

/// Right-preconditioned restarted GMRES: solves apply(x) = rhs with the
/// residual measured on the unpreconditioned system. An empty `precond`
/// means identity.
GmresResult gmres(const LinearOperator& apply, const LinearOperator& precond, const CVector& rhs,
                  const GmresOptions& options = {});

/// Eigenvalues with their vectors. For pencils the eigenvalue convention is
/// A x = -λ B x; left_vectors(:, j) then satisfies yᴴ (A + λ_j B) = 0.
struct EigenSolution {
  std::vector<Complex> eigenvalues;
  CMatrix right_vectors;
  CMatrix left_vectors;
  std::vector<double> residuals;
  std::vector<double> left_residuals;

  std::size_t size() const { return eigenvalues.size(); }
};

struct ArnoldiOptions {
  int subspace_dim = 30;
  int wanted = 6;
  double tol = 1e-10;  // Ritz residual relative to |θ|
  int max_restarts = 300;
  std::uint64_t seed = 20190101;
  std::optional<CVector> start;
};

/// Krylov–Schur restarted Arnoldi for the `wanted` largest-magnitude
/// eigenvalues of a linear operator of dimension n. Results are ordered by
/// decreasing magnitude. Residuals are the Ritz residual norms.
EigenSolution arnoldi_eigs(const LinearOperator& apply, Eigen::Index n, const ArnoldiOptions& options);

// ---------------------------------------------------------------------------
// Dense eigensolvers
// ---------------------------------------------------------------------------

struct SchurForm {
  CMatrix t;  // upper triangular
  CMatrix q;  // unitary, a = q t qᴴ
};

/// Householder reduction to Hessenberg form followed by single-shift complex
/// QR iteration with Wilkinson shifts.
SchurForm complex_schur(const CMatrix& a);

/// Reorders a Schur form in place so the selected eigenvalues lead the
/// diagonal, preserving their relative order.
void reorder_schur(SchurForm& schur, const std::vector<bool>& select);

/// Unit-norm right eigenvectors of an upper triangular matrix, column j for t(j, j).
CMatrix triangular_eigenvectors(const CMatrix& t);

struct DenseEigen {
  CVector values;
  CMatrix vectors;  // unit 2-norm columns
};

DenseEigen dense_eig(const CMatrix& a);

/// Small projected pencil (A_c, B_c) with B_c Hermitian positive semidefinite.
struct DensePencil {
  CMatrix a;
  CMatrix b;
};

struct GenEigOptions {
  bool compute_left = true;
  double infinite_threshold = 1e-8;  // |μ| below this times max|μ| is discarded
};

/// Finite eigenvalues of A x = -λ B x through the spectrum μ = -1/λ of A⁻¹B.
/// Directions in the kernel of B (μ ≈ 0) are dropped. Left vectors come from
/// the same procedure on (Aᴴ, B). Throws SingularMatrixError when A is not
/// invertible.
EigenSolution dense_geneig(const DensePencil& pencil, const GenEigOptions& options = {});

/// ‖A x + λ B x‖ / (‖A x‖ + |λ| ‖B x‖)
double pencil_residual(const CMatrix& a, const CMatrix& b, Complex lambda, const CVector& x);

}  // namespace steklov
