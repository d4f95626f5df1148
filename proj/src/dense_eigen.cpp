#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/LU>

#include "steklov/linalg.hpp"

namespace steklov {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double norm1(Complex z) { return std::abs(z.real()) + std::abs(z.imag()); }

// c real, s complex, with [c s; -conj(s) c] [a; b] = [r; 0].
struct Rotation {
  double c = 1.0;
  Complex s = 0.0;
  Complex r = 0.0;
};

Rotation make_rotation(Complex a, Complex b) {
  Rotation g;
  const double abs_a = std::abs(a);
  const double abs_b = std::abs(b);
  if (abs_b == 0.0) {
    g.r = a;
    return g;
  }
  if (abs_a == 0.0) {
    g.c = 0.0;
    g.s = std::conj(b) / abs_b;
    g.r = abs_b;
    return g;
  }
  const double rr = std::hypot(abs_a, abs_b);
  const Complex phase = a / abs_a;
  g.c = abs_a / rr;
  g.s = phase * std::conj(b) / rr;
  g.r = phase * rr;
  return g;
}

// Rows i, i+1 over columns [c0, n): G * rows.
void rotate_rows(CMatrix& m, Eigen::Index i, Eigen::Index c0, const Rotation& g) {
  for (Eigen::Index j = c0; j < m.cols(); ++j) {
    const Complex x = m(i, j);
    const Complex y = m(i + 1, j);
    m(i, j) = g.c * x + g.s * y;
    m(i + 1, j) = g.c * y - std::conj(g.s) * x;
  }
}

// Columns i, i+1 over rows [0, r1): cols * Gᴴ.
void rotate_cols(CMatrix& m, Eigen::Index i, Eigen::Index r1, const Rotation& g) {
  const Complex sc = std::conj(g.s);
  for (Eigen::Index k = 0; k < r1; ++k) {
    const Complex x = m(k, i);
    const Complex y = m(k, i + 1);
    m(k, i) = g.c * x + sc * y;
    m(k, i + 1) = g.c * y - g.s * x;
  }
}

void hessenberg_reduce(CMatrix& h, CMatrix& q) {
  const Eigen::Index n = h.rows();
  q.setIdentity(n, n);
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    CVector v = h.col(k).tail(len);
    const double xnorm = v.norm();
    if (xnorm == 0.0) continue;
    const Complex x0 = v(0);
    const Complex phase = std::abs(x0) == 0.0 ? Complex(1.0) : x0 / std::abs(x0);
    const Complex alpha = -phase * xnorm;
    v(0) -= alpha;
    const double vn = v.norm();
    if (vn == 0.0) continue;
    v /= vn;
    // H <- (I - 2vvᴴ) H (I - 2vvᴴ) on the trailing block.
    auto rows = h.bottomRows(len);
    const Eigen::RowVectorXcd wl = v.adjoint() * rows;
    rows.noalias() -= 2.0 * v * wl;
    auto cols = h.rightCols(len);
    const CVector wr = cols * v;
    cols.noalias() -= 2.0 * wr * v.adjoint();
    auto qc = q.rightCols(len);
    const CVector wq = qc * v;
    qc.noalias() -= 2.0 * wq * v.adjoint();
    h.col(k).tail(len - 1).setZero();
    h(k + 1, k) = alpha;
  }
}

Complex wilkinson_shift(const CMatrix& t, Eigen::Index iu, int iter) {
  if (iter == 10 || iter == 20 || iter == 40) {
    // Exceptional shift.
    const double sub2 = iu >= 2 ? std::abs(t(iu - 1, iu - 2).real()) : 0.0;
    return std::abs(t(iu, iu - 1).real()) + sub2 + t(iu, iu);
  }
  Eigen::Matrix2cd b = t.block(iu - 1, iu - 1, 2, 2);
  const double scale = b.cwiseAbs().sum();
  if (scale == 0.0) return 0.0;
  b /= scale;
  const Complex bc = b(0, 1) * b(1, 0);
  const Complex c = b(0, 0) - b(1, 1);
  const Complex disc = std::sqrt(c * c + 4.0 * bc);
  const Complex det = b(0, 0) * b(1, 1) - bc;
  const Complex trace = b(0, 0) + b(1, 1);
  Complex e1 = 0.5 * (trace + disc);
  Complex e2 = 0.5 * (trace - disc);
  if (norm1(e1) > norm1(e2))
    e2 = det / e1;
  else if (norm1(e2) != 0.0)
    e1 = det / e2;
  const Complex pick = std::abs(e1 - b(1, 1)) < std::abs(e2 - b(1, 1)) ? e1 : e2;
  return scale * pick;
}

}  // namespace

SchurForm complex_schur(const CMatrix& a) {
  if (a.rows() != a.cols()) throw ParameterError("complex_schur: matrix must be square");
  const Eigen::Index n = a.rows();
  SchurForm s;
  s.t = a;
  hessenberg_reduce(s.t, s.q);
  if (n <= 1) return s;

  const double anorm = std::max(s.t.norm(), std::numeric_limits<double>::min());
  auto negligible = [&](Eigen::Index i) {
    const double sd = norm1(s.t(i, i - 1));
    const double d = norm1(s.t(i - 1, i - 1)) + norm1(s.t(i, i));
    return sd <= kEps * d || sd <= kEps * anorm;
  };

  Eigen::Index iu = n - 1;
  int iter = 0;
  long total = 0;
  const long max_total = 60L * n;
  while (true) {
    while (iu > 0 && negligible(iu)) {
      s.t(iu, iu - 1) = 0.0;
      --iu;
      iter = 0;
    }
    if (iu == 0) break;
    ++iter;
    if (++total > max_total) throw ConvergenceError("complex_schur: QR iteration did not converge");

    Eigen::Index il = iu - 1;
    while (il > 0 && !negligible(il)) --il;

    const Complex shift = wilkinson_shift(s.t, iu, iter);
    Rotation g = make_rotation(s.t(il, il) - shift, s.t(il + 1, il));
    rotate_rows(s.t, il, il, g);
    rotate_cols(s.t, il, std::min(il + 2, iu) + 1, g);
    rotate_cols(s.q, il, n, g);
    for (Eigen::Index i = il + 1; i < iu; ++i) {
      g = make_rotation(s.t(i, i - 1), s.t(i + 1, i - 1));
      s.t(i, i - 1) = g.r;
      s.t(i + 1, i - 1) = 0.0;
      rotate_rows(s.t, i, i, g);
      rotate_cols(s.t, i, std::min(i + 2, iu) + 1, g);
      rotate_cols(s.q, i, n, g);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) s.t(i, j) = 0.0;
  return s;
}

void reorder_schur(SchurForm& schur, const std::vector<bool>& select) {
  const Eigen::Index n = schur.t.rows();
  if (static_cast<Eigen::Index>(select.size()) != n) throw ParameterError("reorder_schur: selection size mismatch");
  std::vector<bool> sel = select;
  Eigen::Index target = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!sel[k]) continue;
    // Bubble diagonal entry k up to position `target` with adjacent swaps.
    for (Eigen::Index j = k; j > target; --j) {
      const Eigen::Index p = j - 1;
      const Complex t11 = schur.t(p, p);
      const Complex t22 = schur.t(p + 1, p + 1);
      const Rotation g = make_rotation(schur.t(p, p + 1), t22 - t11);
      if (p + 2 < n) rotate_rows(schur.t, p, p + 2, g);
      rotate_cols(schur.t, p, p, g);
      schur.t(p, p) = t22;
      schur.t(p + 1, p + 1) = t11;
      rotate_cols(schur.q, p, n, g);
      std::swap(sel[p], sel[p + 1]);
    }
    ++target;
  }
}

CMatrix triangular_eigenvectors(const CMatrix& t) {
  const Eigen::Index n = t.rows();
  CMatrix y = CMatrix::Zero(n, n);
  const double tnorm = std::max(t.norm(), std::numeric_limits<double>::min());
  const double small = kEps * tnorm;
  for (Eigen::Index k = 0; k < n; ++k) {
    y(k, k) = 1.0;
    const Complex lambda = t(k, k);
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      Complex acc = 0.0;
      for (Eigen::Index l = i + 1; l <= k; ++l) acc += t(i, l) * y(l, k);
      Complex den = t(i, i) - lambda;
      if (std::abs(den) < small) den = small;
      y(i, k) = -acc / den;
      if (std::abs(y(i, k)) > 1e150) y.col(k).head(k + 1) /= std::abs(y(i, k));
    }
    y.col(k).normalize();
  }
  return y;
}

DenseEigen dense_eig(const CMatrix& a) {
  const SchurForm s = complex_schur(a);
  DenseEigen out;
  out.values = s.t.diagonal();
  out.vectors = s.q * triangular_eigenvectors(s.t);
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) out.vectors.col(j).normalize();
  return out;
}

double pencil_residual(const CMatrix& a, const CMatrix& b, Complex lambda, const CVector& x) {
  const CVector ax = a * x;
  const CVector bx = b * x;
  const double den = ax.norm() + std::abs(lambda) * bx.norm();
  if (den == 0.0) return 0.0;
  return (ax + lambda * bx).norm() / den;
}

namespace {

struct FiniteSpectrum {
  std::vector<Complex> lambda;
  CMatrix vectors;
};

FiniteSpectrum finite_pencil_spectrum(const CMatrix& a, const CMatrix& b, double threshold) {
  const Eigen::Index n = a.rows();
  FiniteSpectrum out;
  if (n == 0) return out;
  const Eigen::PartialPivLU<CMatrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw SingularMatrixError("dense_geneig: A_c is numerically singular (rcond = " + std::to_string(rcond) + ")");

  // With R the rows/columns where B is nonzero, B = E_R B_RR E_Rᵀ and the
  // nonzero spectrum of A⁻¹B is that of B_RR (A⁻¹)_RR, eigenvectors x = A⁻¹ E_R y.
  std::vector<Eigen::Index> range;
  for (Eigen::Index j = 0; j < n; ++j)
    if (b.row(j).cwiseAbs().maxCoeff() > 0.0 || b.col(j).cwiseAbs().maxCoeff() > 0.0) range.push_back(j);
  const auto r = static_cast<Eigen::Index>(range.size());
  CMatrix basis;
  DenseEigen eig;
  if (r < n) {
    CMatrix e = CMatrix::Zero(n, r);
    CMatrix brr(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      e(range[static_cast<std::size_t>(i)], i) = 1.0;
      for (Eigen::Index j = 0; j < r; ++j)
        brr(i, j) = b(range[static_cast<std::size_t>(i)], range[static_cast<std::size_t>(j)]);
    }
    basis = lu.solve(e);
    CMatrix sub(r, r);
    for (Eigen::Index i = 0; i < r; ++i) sub.row(i) = basis.row(range[static_cast<std::size_t>(i)]);
    eig = dense_eig(brr * sub);
  } else {
    eig = dense_eig(lu.solve(b));
  }
  const Eigen::Index m = eig.values.size();
  double max_mu = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) max_mu = std::max(max_mu, std::abs(eig.values(j)));
  if (max_mu == 0.0) return out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < m; ++j)
    if (std::abs(eig.values(j)) > threshold * max_mu) keep.push_back(j);
  out.vectors.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.lambda.push_back(-1.0 / eig.values(keep[j]));
    const auto col = static_cast<Eigen::Index>(j);
    if (basis.size() > 0)
      out.vectors.col(col) = (basis * eig.vectors.col(keep[j])).normalized();
    else
      out.vectors.col(col) = eig.vectors.col(keep[j]);
  }
  return out;
}

}  // namespace

EigenSolution dense_geneig(const DensePencil& pencil, const GenEigOptions& options) {
  const CMatrix& a = pencil.a;
  const CMatrix& b = pencil.b;
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ParameterError("dense_geneig: pencil matrices must be square and of equal size");

  FiniteSpectrum right = finite_pencil_spectrum(a, b, options.infinite_threshold);
  EigenSolution sol;
  sol.eigenvalues = right.lambda;
  sol.right_vectors = std::move(right.vectors);
  for (std::size_t j = 0; j < sol.eigenvalues.size(); ++j)
    sol.residuals.push_back(
        pencil_residual(a, b, sol.eigenvalues[j], sol.right_vectors.col(static_cast<Eigen::Index>(j))));

  if (options.compute_left && !sol.eigenvalues.empty()) {
    const CMatrix ah = a.adjoint();
    const FiniteSpectrum left = finite_pencil_spectrum(ah, b, options.infinite_threshold);
    // Pair each right eigenvalue λ with the adjoint eigenvalue closest to conj(λ).
    const std::size_t m = sol.eigenvalues.size();
    sol.left_vectors = CMatrix::Zero(a.rows(), static_cast<Eigen::Index>(m));
    std::vector<bool> used(left.lambda.size(), false);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    sol.left_residuals.assign(m, 0.0);
    for (std::size_t j : order) {
      const Complex target = std::conj(sol.eigenvalues[j]);
      std::size_t best = left.lambda.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < left.lambda.size(); ++k)
        if (!used[k] && std::abs(left.lambda[k] - target) < best_d) {
          best_d = std::abs(left.lambda[k] - target);
          best = k;
        }
      if (best == left.lambda.size()) continue;
      used[best] = true;
      const auto col = static_cast<Eigen::Index>(j);
      sol.left_vectors.col(col) = left.vectors.col(static_cast<Eigen::Index>(best));
      sol.left_residuals[j] = pencil_residual(ah, b, left.lambda[best], sol.left_vectors.col(col));
    }
  }
  return sol;
}

}  // namespace steklov
