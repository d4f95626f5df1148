#include <cmath>

#include "steklov/linalg.hpp"

namespace steklov {

namespace {

// Rotation with real cosine that maps (a, b) to (r, 0).
struct Givens {
  double c = 1.0;
  Complex s = 0.0;

  static Givens make(Complex a, Complex b) {
    Givens g;
    const double abs_a = std::abs(a);
    const double abs_b = std::abs(b);
    if (abs_b == 0.0) return g;
    if (abs_a == 0.0) {
      g.c = 0.0;
      g.s = 1.0;
      return g;
    }
    const double r = std::hypot(abs_a, abs_b);
    g.c = abs_a / r;
    g.s = (a / abs_a) * std::conj(b) / r;
    return g;
  }

  void apply(Complex& x, Complex& y) const {
    const Complex nx = c * x + s * y;
    y = c * y - std::conj(s) * x;
    x = nx;
  }
};

}  // namespace

GmresResult gmres(const LinearOperator& apply, const LinearOperator& precond, const CVector& rhs,
                  const GmresOptions& options) {
  const Eigen::Index n = rhs.size();
  GmresResult result;
  result.x = CVector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.stats.converged = true;
    return result;
  }
  auto prec = [&](const CVector& v) -> CVector { return precond ? precond(v) : v; };

  const int m = std::max(1, std::min<int>(options.restart, static_cast<int>(n)));
  CMatrix v(n, m + 1);
  CMatrix z(n, m);
  CMatrix h = CMatrix::Zero(m + 1, m);
  std::vector<Givens> rot(m);
  CVector g(m + 1);

  CVector r = rhs;
  double beta = rhs_norm;
  int total = 0;

  while (total < options.max_iter) {
    v.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    int j = 0;
    bool done = false;
    double prev_res = 1.0;
    for (; j < m && total < options.max_iter; ++j, ++total) {
      z.col(j) = prec(v.col(j));
      CVector w = apply(z.col(j));
      // Modified Gram-Schmidt with one re-orthogonalization pass.
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const Complex hij = v.col(i).dot(w);
          h(i, j) += hij;
          w -= hij * v.col(i);
        }
      const double wn = w.norm();
      h(j + 1, j) = wn;
      for (int i = 0; i < j; ++i) rot[i].apply(h(i, j), h(i + 1, j));
      rot[j] = Givens::make(h(j, j), h(j + 1, j));
      rot[j].apply(h(j, j), h(j + 1, j));
      rot[j].apply(g(j), g(j + 1));

      const double res = std::abs(g(j + 1)) / rhs_norm;
      result.stats.relative_residual = res;
      // With a backward-error target the cycle ends once the estimate stops
      // improving, so the true residual gets checked.
      if (options.matrix_norm > 0.0 && j >= 5 && j % 5 == 0) {
        if (res > 0.5 * prev_res) {
          ++j;
          ++total;
          break;
        }
        prev_res = res;
      }
      if (wn <= 1e-14 * h.col(j).head(j + 1).norm()) {
        result.stats.breakdown = true;
        done = true;
        ++j;
        ++total;
        break;
      }
      v.col(j + 1) = w / wn;
      if (res <= options.tol) {
        done = true;
        ++j;
        ++total;
        break;
      }
    }
    // Back-substitution on the j x j triangular system.
    CVector y = g.head(j);
    for (int i = j - 1; i >= 0; --i) {
      for (int k = i + 1; k < j; ++k) y(i) -= h(i, k) * y(k);
      y(i) /= h(i, i);
    }
    result.x += z.leftCols(j) * y;
    r = rhs - apply(result.x);
    beta = r.norm();
    result.stats.relative_residual = beta / rhs_norm;
    result.stats.backward_error = beta / (options.matrix_norm * result.x.norm() + rhs_norm);
    if (beta / rhs_norm <= options.tol || (options.matrix_norm > 0.0 && result.stats.backward_error <= options.tol)) {
      result.stats.converged = true;
      break;
    }
    if (done && result.stats.breakdown) break;
    h.setZero();
  }
  result.stats.iterations = total;
  return result;
}

}  // namespace steklov
