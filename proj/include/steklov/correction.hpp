#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "steklov/problem.hpp"

namespace steklov {

/// Mass matrix used on the right-hand side of the dual correction solve.
///  Adjoint: M_{conj(k²n)+1}, the exact adjoint of ã - a (exact dual pairs are fixed points).
///  Literal: M_{k²n+1}, the primal matrix reused verbatim.
/// Both coincide for real n.
enum class DualCorrectionForm { Adjoint, Literal };

struct MultigridConfig {
  DomainSpec domain;
  ProblemParams params;
  int n_div_coarse = 16;
  int n_levels = 4;
  int cluster_start = 1;  // 1-based position in the eigenvalue ordering on the coarse mesh
  int cluster_size = 1;
  /// Optional eigenvalue estimates used instead of cluster_start to pick the
  /// coarse cluster (nearest match).
  std::vector<Complex> cluster_targets;
  double drop_tol = 1e-10;        // relative residual norm below which a correction column is dropped
  double tracking_radius = 0.5;   // max |λ_new - λ_prev| / max(1, |λ_prev|)
  std::size_t dense_cap = 3000;   // coarse space dimension limit
  DualCorrectionForm dual_form = DualCorrectionForm::Adjoint;

  /// Throws ParameterError on an inconsistent configuration.
  void check() const;
};

/// q×q pairing matrix G_js = b(u_j, u*_s) = (u*_s)ᴴ B u_j.
struct A0Diagnostics {
  CMatrix g;
  double min_diagonal = 0.0;
  double max_off_diagonal = 0.0;
  std::vector<std::string> warnings;
};

struct LevelRecord {
  int level = 0;
  double h = 0.0;
  Eigen::Index dofs = 0;
  Eigen::Index pencil_dim = 0;
  int dropped_columns = 0;
  std::vector<Complex> primal;
  std::vector<Complex> dual;
  std::vector<double> primal_residuals;  // in the pencil the pairs were computed from
  std::vector<double> dual_residuals;
  std::vector<double> fine_residuals;    // primal pairs against the full level pencil
  double seconds = 0.0;
  A0Diagnostics a0;
};

struct CorrectionState {
  int level = 0;
  std::vector<EigenPair> primal;
  std::vector<EigenPair> dual;
  std::vector<LevelRecord> history;
};

/// Matrices and factorizations of one hierarchy level.
struct LevelOperators {
  SteklovSystem system;
  ComplexSparseMatrix dual_shifted_mass;  // M_{conj(k²n)+1}
  SpdFactor atilde_factor;
  RealSparseMatrix from_coarse;  // composed prolongation from level 0
  SpdFactor coarse_gram;         // factor of from_coarseᵀ Ã from_coarse
};

/// Hierarchy plus lazily assembled level operators, shared between clusters.
class MultigridWorkspace {
 public:
  MultigridWorkspace(const DomainSpec& domain, const ProblemParams& params, int n_div_coarse, int n_levels);

  const MeshHierarchy& hierarchy() const { return hierarchy_; }
  const ProblemParams& params() const { return params_; }
  int n_levels() const { return static_cast<int>(hierarchy_.size()); }
  int n_div_coarse() const { return n_div_coarse_; }

  const LevelOperators& level(int l);

 private:
  ProblemParams params_;
  int n_div_coarse_;
  MeshHierarchy hierarchy_;
  std::map<int, std::unique_ptr<LevelOperators>> levels_;
};

LevelOperators build_level_operators(const Mesh& mesh, const ProblemParams& params, const RealSparseMatrix& from_coarse);

/// Ã ũ = -λ B (Pu) + M_{k²n+1} (Pu)
CVector correction_solve_primal(const LevelOperators& ops, Complex lambda, const CVector& pu);

/// Ã ũ* = -λ* B (Pu*) + M (Pu*) with M chosen by `form`.
CVector correction_solve_dual(const LevelOperators& ops, Complex lambda_star, const CVector& pu_star,
                              DualCorrectionForm form = DualCorrectionForm::Adjoint);

enum class ColumnTag { CoarseHat, PrimalCorrection, DualCorrection };

/// Z = [P | E]: P the prolonged coarse hats (kept sparse and untouched), E the
/// correction vectors after Ã-orthogonalization against span(P) and each other.
struct AugmentedSpace {
  RealSparseMatrix coarse;
  CMatrix extra;
  std::vector<ColumnTag> tags;  // one per column of Z
  int dropped = 0;

  Eigen::Index rows() const { return coarse.rows(); }
  Eigen::Index cols() const { return coarse.cols() + extra.cols(); }
  CMatrix dense() const;
  /// Z x
  CVector map(const CVector& x) const;
};

/// Correction vectors are ordered primal first, then dual.
AugmentedSpace build_augmented_space(const RealSparseMatrix& coarse, const RealSparseMatrix& atilde,
                                     const SpdFactor& coarse_gram, const std::vector<CVector>& corrections,
                                     const std::vector<ColumnTag>& tags, double drop_tol = 1e-10);
AugmentedSpace build_augmented_space(const LevelOperators& ops, const std::vector<CVector>& primal,
                                     const std::vector<CVector>& dual, double drop_tol = 1e-10);

struct AugmentedEigen {
  std::vector<EigenPair> primal;
  std::vector<EigenPair> dual;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  Eigen::Index pencil_dim = 0;
};

/// Galerkin eigenproblem in span(Z): primal from (ZᴴAZ, ZᴴBZ), dual from its
/// conjugate transpose. Selects the eigenvalues nearest to `previous`.
AugmentedEigen solve_augmented_eigen(const SteklovSystem& fine, const AugmentedSpace& z,
                                     const std::vector<Complex>& previous, double tracking_radius = 0.5);

/// Greedy one-to-one matching: result[t] is the candidate index assigned to
/// target t. Throws TrackingError when there are fewer candidates than targets.
std::vector<std::size_t> greedy_match(const std::vector<Complex>& candidates, const std::vector<Complex>& targets);

/// One correction step onto the level described by `fine`, with `prolong`
/// mapping the state's vectors to that level (identity allowed).
CorrectionState correction_step(const LevelOperators& fine, const RealSparseMatrix& prolong,
                                const CorrectionState& state, const MultigridConfig& config);
CorrectionState one_correction_step(MultigridWorkspace& ws, const CorrectionState& state, const MultigridConfig& config);

/// Dense solve of the full coarse primal and dual problems, selecting the
/// configured cluster.
CorrectionState coarse_solve(MultigridWorkspace& ws, const MultigridConfig& config);

struct MultigridResult {
  EigenCluster cluster;
  CorrectionState state;
  Eigen::Index coarse_dim = 0;
  Eigen::Index peak_pencil_dim = 0;
  double seconds = 0.0;
};

MultigridResult multigrid_solve(const MultigridConfig& config);
MultigridResult multigrid_solve(MultigridWorkspace& ws, const MultigridConfig& config);

A0Diagnostics check_assumption_A0(const std::vector<EigenPair>& primal, const std::vector<EigenPair>& dual,
                                  const RealSparseMatrix& b);

/// Warning when the largest off-diagonal pairing did not shrink along the
/// given sequence (e.g. over successively finer coarse meshes).
std::vector<std::string> a0_trend_warnings(const std::vector<A0Diagnostics>& sequence);

}  // namespace steklov
