#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "steklov/problem.hpp"

using namespace steklov;

namespace {

ProblemParams params_with(Complex n) {
  ProblemParams p;
  p.n = n;
  return p;
}

// Independent oracle: eliminate the interior unknowns and solve the dense
// boundary problem  (A_bb - A_bi A_ii⁻¹ A_ib) x = -λ B_bb x  with Eigen.
std::vector<Complex> schur_complement_spectrum(const Mesh& mesh, const ProblemParams& params) {
  const CMatrix a(assemble_A(mesh, params));
  const RMatrix b(assemble_boundary_mass(mesh));
  std::vector<int> bd, in;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    (mesh.boundary_flags[v] ? bd : in).push_back(static_cast<int>(v));
  const auto nb = static_cast<Eigen::Index>(bd.size()), ni = static_cast<Eigen::Index>(in.size());
  CMatrix abb(nb, nb), abi(nb, ni), aib(ni, nb), aii(ni, ni);
  RMatrix bbb(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      abb(i, j) = a(bd[i], bd[j]);
      bbb(i, j) = b(bd[i], bd[j]);
    }
    for (Eigen::Index j = 0; j < ni; ++j) abi(i, j) = a(bd[i], in[j]);
  }
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) aib(i, j) = a(in[i], bd[j]);
    for (Eigen::Index j = 0; j < ni; ++j) aii(i, j) = a(in[i], in[j]);
  }
  const CMatrix sc = abb - abi * aii.partialPivLu().solve(aib);
  const CMatrix m = -(bbb.cast<Complex>().partialPivLu().solve(sc));
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  // Smallest magnitude first, like the Arnoldi target.
  std::sort(out.begin(), out.end(), [](Complex x, Complex y) { return std::abs(x) < std::abs(y); });
  return out;
}

double nearest(const std::vector<Complex>& set, Complex z) {
  double d = 1e300;
  for (Complex w : set) d = std::min(d, std::abs(w - z));
  return d;
}

}  // namespace

TEST_CASE("direct solve against the boundary Schur complement") {
  for (DomainKind d : {DomainKind::Square, DomainKind::LShape, DomainKind::SlitSquare}) {
    for (Complex n : {Complex(4.0, 0.0), Complex(4.0, 4.0)}) {
      const Mesh mesh = build_initial_mesh(DomainSpec{d}, 8);
      const ProblemParams p = params_with(n);
      const SteklovSystem sys = assemble_system(mesh, p);
      const DirectSolution sol = direct_solve(sys);
      const std::vector<Complex> oracle = schur_complement_spectrum(mesh, p);
      CAPTURE(DomainSpec{d}.name());
      CAPTURE(n);
      REQUIRE(sol.pairs.size() == 6);
      for (const auto& pair : sol.pairs) {
        CHECK(nearest(oracle, pair.lambda) <= 1e-9 * std::max(1.0, std::abs(pair.lambda)));
        CHECK(residual(sys.a, sys.b, pair) <= 1e-9);
        CHECK(boundary_norm(sys.b, pair.coeffs) == doctest::Approx(1.0).epsilon(1e-12));
      }
      // The six returned values are the six of smallest magnitude.
      double worst_returned = 0.0;
      for (const auto& pair : sol.pairs) worst_returned = std::max(worst_returned, std::abs(pair.lambda));
      CHECK(worst_returned <= std::abs(oracle[5]) * (1.0 + 1e-9));
      for (std::size_t j = 1; j < sol.pairs.size(); ++j)
        CHECK_FALSE(eigenvalue_order(sol.pairs[j].lambda, sol.pairs[j - 1].lambda));
    }
  }
}

TEST_CASE("real index gives a real spectrum") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::LShape}, 8);
  const DirectSolution sol = direct_solve(mesh, params_with(4.0));
  for (const auto& p : sol.pairs) CHECK(std::abs(p.lambda.imag()) <= 1e-10 * std::abs(p.lambda));
}

TEST_CASE("normalization fixes scale and phase") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::Square}, 6);
  const SteklovSystem sys = assemble_system(mesh, params_with(Complex(4.0, 4.0)));
  const DirectSolution sol = direct_solve(sys);
  const EigenPair p = sol.pairs[0];
  EigenPair rotated = p;
  rotated.coeffs *= std::polar(3.7, 1.1);
  normalize_pair(sys.b, rotated);
  CHECK((rotated.coeffs - p.coeffs).norm() <= 1e-12);
  double biggest = 0.0;
  Eigen::Index arg = 0;
  for (Eigen::Index i = 0; i < p.coeffs.size(); ++i)
    if (sys.b.coeff(i, i) > 0.0 && std::abs(p.coeffs(i)) > biggest * (1.0 + 1e-6)) {
      biggest = std::abs(p.coeffs(i));
      arg = i;
    }
  CHECK(std::abs(p.coeffs(arg).imag()) <= 1e-14);
  CHECK(p.coeffs(arg).real() > 0.0);
  CVector zero = CVector::Zero(sys.dim());
  CHECK_THROWS_AS(normalize_vector(sys.b, zero), ParameterError);
}

TEST_CASE("inner solver paths and shifts agree") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::SlitSquare}, 8);
  const ProblemParams p = params_with(Complex(4.0, 4.0));
  const DirectSolution dense = direct_solve(mesh, p);
  DirectOptions o;
  o.dense_cap = 0;
  const DirectSolution iter = direct_solve(mesh, p, o);
  CHECK(dense.stats.dense_inner);
  CHECK_FALSE(iter.stats.dense_inner);
  CHECK(iter.stats.inner_iterations > 0);
  DirectOptions s;
  s.shift = Complex(0.3, -0.2);
  const DirectSolution shifted = direct_solve(mesh, p, s);
  for (std::size_t j = 0; j < dense.pairs.size(); ++j) {
    CHECK(std::abs(dense.pairs[j].lambda - iter.pairs[j].lambda) <= 1e-9);
    CHECK(std::abs(dense.pairs[j].lambda - shifted.pairs[j].lambda) <= 1e-9);
  }
}

TEST_CASE("dual problem") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::LShape}, 8);
  const ProblemParams p = params_with(Complex(4.0, 4.0));
  const SteklovSystem sys = assemble_system(mesh, p);
  const DirectSolution primal = direct_solve(sys);
  const DirectSolution dual = direct_solve_dual(mesh, p);
  REQUIRE(dual.pairs.size() == primal.pairs.size());
  for (const auto& d : dual.pairs) {
    CHECK(d.is_dual);
    CHECK(residual(sys.a, sys.b, d) <= 1e-9);
    double gap = 1e300;
    for (const auto& q : primal.pairs) gap = std::min(gap, std::abs(d.lambda - std::conj(q.lambda)));
    CHECK(gap <= 1e-9);
  }
  for (const auto& q : primal.pairs) {
    const EigenPair d = dual_from_primal(q);
    CHECK(d.is_dual);
    CHECK(residual(sys.a, sys.b, d) <= 1e-9);
    const EigenPair back = dual_from_primal(d);
    CHECK_FALSE(back.is_dual);
    CHECK(back.lambda == q.lambda);
    CHECK(back.coeffs == q.coeffs);
  }
}

TEST_CASE("residual detects a perturbed eigenvalue") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::Square}, 8);
  const SteklovSystem sys = assemble_system(mesh, params_with(Complex(4.0, 4.0)));
  EigenPair p = direct_solve(sys).pairs[0];
  CHECK(residual(sys.a, sys.b, p) <= 1e-9);
  p.lambda += 0.1;
  CHECK(residual(sys.a, sys.b, p) > 1e-3);
}

TEST_CASE("Neumann-to-Dirichlet map") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::Square}, 6);
  const ProblemParams p = params_with(Complex(4.0, 4.0));
  const SteklovSystem sys = assemble_system(mesh, p);
  const auto boundary_part = [&](const CVector& v) {
    CVector out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!mesh.boundary_flags[static_cast<std::size_t>(i)]) out(i) = 0.0;
    return out;
  };

  // Eigenpairs restated: T(u|∂) = -u|∂ / λ.
  for (const auto& e : direct_solve(sys).pairs) {
    const CVector f = boundary_part(e.coeffs);
    const CVector w = ntd_apply(mesh, p, f);
    CHECK((w + f / e.lambda).norm() <= 1e-9 * f.norm() / std::abs(e.lambda));
  }

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  CVector f1(sys.dim()), f2(sys.dim());
  for (Eigen::Index i = 0; i < sys.dim(); ++i) {
    f1(i) = Complex(g(rng), g(rng));
    f2(i) = Complex(g(rng), g(rng));
  }
  f1 = boundary_part(f1);
  f2 = boundary_part(f2);
  const Complex c(0.4, -1.3);
  const CVector lin = ntd_apply(mesh, p, f1 + c * f2);
  const CVector sep = ntd_apply(mesh, p, f1) + c * ntd_apply(mesh, p, f2);
  CHECK((lin - sep).norm() <= 1e-11 * sep.norm());

  // Dense matrix of the map. B T is symmetric because A is complex symmetric.
  std::vector<int> bd = mesh.boundary_vertices();
  const auto nb = static_cast<Eigen::Index>(bd.size());
  CMatrix t(nb, nb);
  for (Eigen::Index j = 0; j < nb; ++j) {
    CVector e = CVector::Zero(sys.dim());
    e(bd[static_cast<std::size_t>(j)]) = 1.0;
    const CVector w = ntd_apply(mesh, p, e);
    for (Eigen::Index i = 0; i < nb; ++i) t(i, j) = w(bd[static_cast<std::size_t>(i)]);
  }
  RMatrix bbb(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) bbb(i, j) = sys.b.coeff(bd[static_cast<std::size_t>(i)], bd[static_cast<std::size_t>(j)]);
  const CMatrix bt = bbb.cast<Complex>() * t;
  CHECK((bt - bt.transpose()).norm() <= 1e-10 * bt.norm());

  CVector bad = CVector::Zero(sys.dim());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.boundary_flags[v]) {
      bad(static_cast<Eigen::Index>(v)) = 1.0;
      break;
    }
  CHECK_THROWS_AS(ntd_apply(mesh, p, bad), ParameterError);
  CHECK_THROWS_AS(ntd_apply(mesh, p, CVector::Zero(3)), ParameterError);
}

TEST_CASE("eigenvalue ordering") {
  std::vector<EigenPair> v(4);
  v[0].lambda = Complex(1.0, 0.0);
  v[1].lambda = Complex(3.0, -1.0);
  v[2].lambda = Complex(3.0, 2.0);
  v[3].lambda = Complex(-2.0, 5.0);
  sort_pairs(v);
  CHECK(v[0].lambda == Complex(3.0, 2.0));
  CHECK(v[1].lambda == Complex(3.0, -1.0));
  CHECK(v[2].lambda == Complex(1.0, 0.0));
  CHECK(v[3].lambda == Complex(-2.0, 5.0));
}

TEST_CASE("direct solve rejects bad options") {
  const Mesh mesh = build_initial_mesh(DomainSpec{DomainKind::Square}, 2);
  DirectOptions o;
  o.n_wanted = 0;
  CHECK_THROWS_AS(direct_solve(mesh, params_with(4.0), o), ParameterError);
  o.n_wanted = 100;
  CHECK_THROWS_AS(direct_solve(mesh, params_with(4.0), o), ParameterError);
}
