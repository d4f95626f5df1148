#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "steklov/linalg.hpp"

namespace steklov {

namespace {

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(dist(rng), dist(rng));
  return v;
}

// Orthogonalizes w against the first k columns of v (classical Gram-Schmidt,
// two passes) and returns the accumulated coefficients.
CVector orthogonalize(const CMatrix& v, Eigen::Index k, CVector& w) {
  CVector h = CVector::Zero(k);
  for (int pass = 0; pass < 2; ++pass) {
    const CVector c = v.leftCols(k).adjoint() * w;
    w.noalias() -= v.leftCols(k) * c;
    h += c;
  }
  return h;
}

// Indices of the eigenvalues sorted by decreasing magnitude.
std::vector<Eigen::Index> by_magnitude(const CVector& values) {
  std::vector<Eigen::Index> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values(a)) > std::abs(values(b)); });
  return idx;
}

}  // namespace

EigenSolution arnoldi_eigs(const LinearOperator& apply, Eigen::Index n, const ArnoldiOptions& options) {
  const int wanted = options.wanted;
  if (wanted < 1 || wanted > n) throw ParameterError("arnoldi_eigs: wanted must be in [1, n]");
  const int m = static_cast<int>(std::min<Eigen::Index>(std::max(options.subspace_dim, wanted + 1), n));
  if (m < wanted) throw ParameterError("arnoldi_eigs: subspace dimension smaller than wanted count");

  std::mt19937_64 rng(options.seed);
  CMatrix v = CMatrix::Zero(n, m + 1);
  CMatrix h = CMatrix::Zero(m + 1, m);

  CVector start = options.start ? *options.start : random_vector(n, rng);
  if (start.size() != n) throw ParameterError("arnoldi_eigs: start vector has wrong size");
  if (start.norm() == 0.0) start = random_vector(n, rng);
  v.col(0) = start.normalized();

  Eigen::Index k = 0;  // current decomposition length
  for (int restart = 0;; ++restart) {
    for (Eigen::Index j = k; j < m; ++j) {
      CVector w = apply(v.col(j));
      const CVector coeff = orthogonalize(v, j + 1, w);
      h.col(j).head(j + 1) += coeff;
      double beta = w.norm();
      if (beta <= 1e-13 * std::max(coeff.norm(), 1e-300)) {
        // Invariant subspace: continue from a fresh direction with zero coupling.
        w = random_vector(n, rng);
        orthogonalize(v, j + 1, w);
        v.col(j + 1) = w.normalized();
        h(j + 1, j) = 0.0;
      } else {
        v.col(j + 1) = w / beta;
        h(j + 1, j) = beta;
      }
    }

    const CMatrix hm = h.topLeftCorner(m, m);
    const DenseEigen ritz = dense_eig(hm);
    const auto order = by_magnitude(ritz.values);
    bool all_converged = true;
    for (int i = 0; i < wanted; ++i) {
      const Eigen::Index idx = order[i];
      // Coupling of the Ritz vector to the residual direction v_{m+1}.
      const double res = std::abs((h.row(m).head(m) * ritz.vectors.col(idx))(0));
      if (res > options.tol * std::abs(ritz.values(idx))) {
        all_converged = false;
        break;
      }
    }

    if (all_converged || restart >= options.max_restarts) {
      if (!all_converged) throw ConvergenceError("arnoldi_eigs: no convergence after the allowed restarts");
      EigenSolution sol;
      sol.right_vectors.resize(n, wanted);
      for (int i = 0; i < wanted; ++i) {
        const Eigen::Index idx = order[i];
        sol.eigenvalues.push_back(ritz.values(idx));
        sol.right_vectors.col(i) = (v.leftCols(m) * ritz.vectors.col(idx)).normalized();
        sol.residuals.push_back(std::abs((h.row(m).head(m) * ritz.vectors.col(idx))(0)));
      }
      return sol;
    }

    // Krylov-Schur restart: keep the leading Schur vectors of the wanted part.
    SchurForm schur = complex_schur(hm);
    const CVector diag = schur.t.diagonal();
    const auto sorder = by_magnitude(diag);
    const int keep = std::min(m - 1, std::max(wanted, wanted + (m - wanted) / 2));
    std::vector<bool> select(m, false);
    for (int i = 0; i < keep; ++i) select[sorder[i]] = true;
    reorder_schur(schur, select);

    const CMatrix vk = v.leftCols(m) * schur.q.leftCols(keep);
    const CVector next = v.col(m);
    const Eigen::RowVectorXcd coupling = h.row(m).head(m) * schur.q.leftCols(keep);
    v.setZero();
    v.leftCols(keep) = vk;
    v.col(keep) = next;
    h.setZero();
    h.topLeftCorner(keep, keep) = schur.t.topLeftCorner(keep, keep).triangularView<Eigen::Upper>();
    h.row(keep).head(keep) = coupling;
    k = keep;
  }
}

}  // namespace steklov
