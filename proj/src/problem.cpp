#include "steklov/problem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace steklov {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Bilinear Rayleigh quotient for the complex symmetric pencil, with the
// Hermitian quotient as fallback when xᵀBx is nearly zero.
Complex rayleigh_lambda(const ComplexSparseMatrix& a, const RealSparseMatrix& b, const CVector& x, bool dual) {
  const CVector ax = dual ? CVector(a.adjoint() * x) : CVector(a * x);
  const CVector bx = b.cast<Complex>() * x;
  const Complex herm_den = x.dot(bx);
  if (!dual) {
    const Complex bil_den = (x.transpose() * bx)(0);
    if (std::abs(bil_den) > 1e-3 * std::abs(herm_den)) return -(x.transpose() * ax)(0) / bil_den;
  }
  return -x.dot(ax) / herm_den;
}

}  // namespace

SteklovSystem assemble_system(const Mesh& mesh, const ProblemParams& params) {
  SteklovSystem sys;
  sys.a = assemble_A(mesh, params);
  sys.b = assemble_boundary_mass(mesh);
  sys.atilde = assemble_Atilde(mesh);
  sys.shifted_mass = assemble_shifted_mass(mesh, params);
  sys.h = mesh_diameter(mesh);
  return sys;
}

SourceSolver::SourceSolver(const SteklovSystem& system, Complex shift, const DirectOptions& options) {
  op_ = system.a;
  if (shift != Complex(0.0)) op_ += shift * to_complex(system.b);
  op_.makeCompressed();
  gmres_.tol = options.inner_tol;
  gmres_.max_iter = options.inner_max_iter;
  double norm_inf = 0.0;
  for (Eigen::Index i = 0; i < op_.outerSize(); ++i) {
    double row = 0.0;
    for (ComplexSparseMatrix::InnerIterator it(op_, i); it; ++it) row += std::abs(it.value());
    norm_inf = std::max(norm_inf, row);
  }
  gmres_.matrix_norm = norm_inf;
  if (static_cast<std::size_t>(system.dim()) <= options.dense_cap) {
    dense_ = true;
    const CMatrix dense = CMatrix(op_);
    auto lu = std::make_shared<Eigen::PartialPivLU<CMatrix>>(dense);
    const double rcond = lu->rcond();
    if (!(rcond > 1e-14)) throw SingularMatrixError("SourceSolver: system matrix is singular");
    lu_ = std::move(lu);
  } else {
    precond_ = SpdFactor(system.atilde);
  }
}

CVector SourceSolver::solve(const CVector& rhs) const {
  if (dense_) return lu_->solve(rhs);
  const auto apply = [this](const CVector& x) -> CVector { return op_ * x; };
  const auto prec = [this](const CVector& x) -> CVector { return precond_.solve(x); };
  GmresResult res = gmres(apply, prec, rhs, gmres_);
  *iterations_ += res.stats.iterations;
  if (!res.stats.converged) throw ConvergenceError("SourceSolver: GMRES did not reach the requested tolerance");
  return std::move(res.x);
}

double residual(const ComplexSparseMatrix& a, const RealSparseMatrix& b, const EigenPair& pair) {
  const CVector& x = pair.coeffs;
  const CVector ax = pair.is_dual ? CVector(a.adjoint() * x) : CVector(a * x);
  const CVector bx = b.cast<Complex>() * x;
  const double den = ax.norm() + std::abs(pair.lambda) * bx.norm();
  if (den == 0.0) return 0.0;
  return (ax + pair.lambda * bx).norm() / den;
}

void normalize_vector(const RealSparseMatrix& b, CVector& x) {
  const double nrm = boundary_norm(b, x);
  if (!(nrm > 0.0)) throw ParameterError("normalize_pair: vector has zero boundary norm");
  x /= nrm;
  const RVector diag = b.diagonal();
  double biggest = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (diag(i) > 0.0) biggest = std::max(biggest, std::abs(x(i)));
  // First boundary entry within a relative 1e-8 of the maximum fixes the phase.
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (diag(i) > 0.0 && std::abs(x(i)) >= biggest * (1.0 - 1e-8)) {
      x *= std::conj(x(i)) / std::abs(x(i));
      x(i) = Complex(std::abs(x(i)), 0.0);
      break;
    }
  }
}

void normalize_pair(const RealSparseMatrix& b, EigenPair& pair) { normalize_vector(b, pair.coeffs); }

bool eigenvalue_order(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

void sort_pairs(std::vector<EigenPair>& pairs) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigenPair& x, const EigenPair& y) { return eigenvalue_order(x.lambda, y.lambda); });
}

EigenPair dual_from_primal(const EigenPair& pair) {
  EigenPair d;
  d.lambda = std::conj(pair.lambda);
  d.coeffs = pair.coeffs.conjugate();
  d.is_dual = !pair.is_dual;
  return d;
}

DirectSolution direct_solve(const SteklovSystem& system, const DirectOptions& options) {
  const auto t0 = Clock::now();
  const Eigen::Index n = system.dim();
  const Eigen::Index nb = (system.b.diagonal().array() > 0.0).count();
  if (options.n_wanted < 1) throw ParameterError("direct_solve: n_wanted must be positive");
  if (options.n_wanted > nb) throw ParameterError("direct_solve: more eigenpairs requested than boundary unknowns");

  DirectSolution sol;
  sol.h = system.h;
  sol.stats.dofs = n;

  const auto tf = Clock::now();
  const SourceSolver solver(system, options.shift, options);
  sol.stats.factor_seconds = seconds_since(tf);
  sol.stats.dense_inner = solver.dense();

  const ComplexSparseMatrix bc = to_complex(system.b);
  int applications = 0;
  const LinearOperator op = [&](const CVector& x) -> CVector {
    ++applications;
    return solver.solve(bc * x);
  };

  const auto te = Clock::now();
  ArnoldiOptions ao;
  ao.wanted = options.n_wanted;
  ao.subspace_dim = options.subspace_dim > 0 ? options.subspace_dim : std::max(2 * options.n_wanted + 10, 30);
  ao.subspace_dim = static_cast<int>(std::min<Eigen::Index>(ao.subspace_dim, nb));
  ao.subspace_dim = std::max(ao.subspace_dim, options.n_wanted);
  ao.tol = options.arnoldi_tol;
  ao.seed = options.seed;
  {
    // Start inside the range of the operator so that kernel directions of B are absent.
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> dist;
    CVector r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = Complex(dist(rng), dist(rng));
    ao.start = op(r);
  }
  const EigenSolution ritz = arnoldi_eigs(op, n, ao);

  for (std::size_t i = 0; i < ritz.size(); ++i) {
    const Complex mu = ritz.eigenvalues[i];
    if (mu == Complex(0.0)) throw ConvergenceError("direct_solve: zero Ritz value");
    EigenPair p;
    // One application of the operator damps the components outside the
    // wanted eigenspace; the Rayleigh quotient then refines λ.
    p.coeffs = op(ritz.right_vectors.col(static_cast<Eigen::Index>(i)));
    normalize_pair(system.b, p);
    p.lambda = rayleigh_lambda(system.a, system.b, p.coeffs, false);
    sol.pairs.push_back(std::move(p));
  }
  sort_pairs(sol.pairs);
  sol.stats.eigen_seconds = seconds_since(te);
  sol.stats.operator_applications = applications;
  sol.stats.inner_iterations = solver.inner_iterations();
  sol.stats.total_seconds = seconds_since(t0);
  return sol;
}

DirectSolution direct_solve(const Mesh& mesh, const ProblemParams& params, const DirectOptions& options) {
  const auto t0 = Clock::now();
  const SteklovSystem sys = assemble_system(mesh, params);
  const double assemble = seconds_since(t0);
  DirectSolution sol = direct_solve(sys, options);
  sol.stats.assemble_seconds = assemble;
  sol.stats.total_seconds += assemble;
  return sol;
}

DirectSolution direct_solve_dual(const Mesh& mesh, const ProblemParams& params, const DirectOptions& options) {
  // Aᴴ for n equals A for conj(n), since S and M are real symmetric.
  DirectOptions opts = options;
  opts.shift = std::conj(options.shift);
  DirectSolution sol = direct_solve(mesh, params.conjugated(), opts);
  for (auto& p : sol.pairs) p.is_dual = true;
  return sol;
}

CVector ntd_apply(const Mesh& mesh, const ProblemParams& params, const CVector& f, const DirectOptions& options) {
  const SteklovSystem sys = assemble_system(mesh, params);
  if (f.size() != sys.dim()) throw ParameterError("ntd_apply: data vector has wrong size");
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (!mesh.boundary_flags[static_cast<std::size_t>(i)] && f(i) != Complex(0.0))
      throw ParameterError("ntd_apply: data must vanish at interior vertices");
  const SourceSolver solver(sys, 0.0, options);
  CVector w = solver.solve(to_complex(sys.b) * f);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!mesh.boundary_flags[static_cast<std::size_t>(i)]) w(i) = 0.0;
  return w;
}

}  // namespace steklov
