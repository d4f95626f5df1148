#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "steklov/fem.hpp"
#include "steklov/linalg.hpp"
#include "steklov/mesh.hpp"

namespace steklov {

/// Discrete Steklov eigenpair;  A x = -λ B x  (primal) or  Aᴴ x = -λ B x  (dual).
struct EigenPair {
  Complex lambda = 0.0;
  CVector coeffs;
  bool is_dual = false;
};

/// q primal pairs tracked together with their q dual partners.
struct EigenCluster {
  int start_index = 1;  // 1-based index of the first member in the eigenvalue ordering
  int q = 1;
  std::vector<EigenPair> primal;
  std::vector<EigenPair> dual;
};

/// All matrices of one mesh.
struct SteklovSystem {
  ComplexSparseMatrix a;             // S - M_{k²n}
  RealSparseMatrix b;                // boundary mass
  RealSparseMatrix atilde;           // S + M
  ComplexSparseMatrix shifted_mass;  // M_{k²n+1}
  double h = 0.0;

  Eigen::Index dim() const { return b.rows(); }
};

SteklovSystem assemble_system(const Mesh& mesh, const ProblemParams& params);

struct DirectOptions {
  int n_wanted = 6;
  int subspace_dim = 0;  // 0 selects max(2 n_wanted + 10, 30)
  double arnoldi_tol = 1e-10;
  double inner_tol = 1e-12;
  int inner_max_iter = 3000;
  std::size_t dense_cap = 3000;  // inner solves are dense up to this many unknowns
  Complex shift = 0.0;           // Arnoldi runs on (A + σB)⁻¹B
  std::uint64_t seed = 20190101;
};

struct DirectStats {
  Eigen::Index dofs = 0;
  bool dense_inner = false;
  int operator_applications = 0;
  long inner_iterations = 0;
  double assemble_seconds = 0.0;
  double factor_seconds = 0.0;
  double eigen_seconds = 0.0;
  double total_seconds = 0.0;
};

struct DirectSolution {
  std::vector<EigenPair> pairs;
  DirectStats stats;
  double h = 0.0;
};

/// Solves (A + σB) w = r, densely for small systems and otherwise by GMRES
/// preconditioned with the sparse Cholesky factor of Ã.
class SourceSolver {
 public:
  SourceSolver(const SteklovSystem& system, Complex shift, const DirectOptions& options);

  CVector solve(const CVector& rhs) const;

  bool dense() const { return dense_; }
  long inner_iterations() const { return *iterations_; }

 private:
  ComplexSparseMatrix op_;
  bool dense_ = false;
  std::shared_ptr<const Eigen::PartialPivLU<CMatrix>> lu_;
  SpdFactor precond_;
  GmresOptions gmres_;
  std::shared_ptr<long> iterations_ = std::make_shared<long>(0);
};

/// Eigenpairs of smallest |λ| via Arnoldi on x ↦ A⁻¹Bx, normalized to
/// unit boundary norm and sorted by descending real part (then imaginary part).
DirectSolution direct_solve(const Mesh& mesh, const ProblemParams& params, const DirectOptions& options = {});
DirectSolution direct_solve(const SteklovSystem& system, const DirectOptions& options = {});

/// Solves the adjoint pencil (Aᴴ, B) independently; pairs are flagged dual.
DirectSolution direct_solve_dual(const Mesh& mesh, const ProblemParams& params, const DirectOptions& options = {});

/// (conj λ, conj x) flagged dual (or primal when applied to a dual pair).
EigenPair dual_from_primal(const EigenPair& pair);

/// Discrete Neumann-to-Dirichlet map: solve A w = B f and return w on the
/// boundary (interior entries zero). f must vanish at interior vertices.
CVector ntd_apply(const Mesh& mesh, const ProblemParams& params, const CVector& f, const DirectOptions& options = {});

/// ‖A x + λ B x‖ / (‖A x‖ + |λ| ‖B x‖); dual pairs use Aᴴ.
double residual(const ComplexSparseMatrix& a, const RealSparseMatrix& b, const EigenPair& pair);

/// Scales to unit boundary norm and rotates the phase so that the
/// largest-magnitude boundary coefficient is real and positive.
void normalize_pair(const RealSparseMatrix& b, EigenPair& pair);
void normalize_vector(const RealSparseMatrix& b, CVector& x);

/// Descending real part, ties by descending imaginary part.
void sort_pairs(std::vector<EigenPair>& pairs);
bool eigenvalue_order(Complex a, Complex b);

}  // namespace steklov
