#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "steklov/correction.hpp"

using namespace steklov;

namespace {

ProblemParams params_with(Complex n) {
  ProblemParams p;
  p.n = n;
  return p;
}

CVector random_vector(Eigen::Index n, std::uint64_t seed, bool real = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(g(rng), real ? 0.0 : g(rng));
  return v;
}

RealSparseMatrix identity(Eigen::Index n) {
  RealSparseMatrix i(n, n);
  i.setIdentity();
  return i;
}

// Cluster state built from the direct solution on one level.
CorrectionState exact_state(const LevelOperators& ops, const std::vector<std::size_t>& members) {
  const DirectSolution sol = direct_solve(ops.system);
  CorrectionState s;
  for (auto j : members) {
    s.primal.push_back(sol.pairs[j]);
    EigenPair d = dual_from_primal(sol.pairs[j]);
    s.dual.push_back(d);
  }
  return s;
}

}  // namespace

TEST_CASE("exact pairs are fixed points of the correction solves") {
  for (Complex n : {Complex(4.0, 0.0), Complex(4.0, 4.0)}) {
    CAPTURE(n);
    MultigridWorkspace ws(DomainSpec{DomainKind::LShape}, params_with(n), 4, 2);
    const LevelOperators& ops = ws.level(1);
    const DirectSolution sol = direct_solve(ops.system);
    for (const auto& p : sol.pairs) {
      const CVector u = correction_solve_primal(ops, p.lambda, p.coeffs);
      CHECK((u - p.coeffs).norm() <= 1e-10 * p.coeffs.norm());
      const EigenPair d = dual_from_primal(p);
      const CVector ud = correction_solve_dual(ops, d.lambda, d.coeffs, DualCorrectionForm::Adjoint);
      CHECK((ud - d.coeffs).norm() <= 1e-10 * d.coeffs.norm());
      const CVector lit = correction_solve_dual(ops, d.lambda, d.coeffs, DualCorrectionForm::Literal);
      if (n.imag() == 0.0) {
        CHECK((lit - ud).norm() <= 1e-14 * ud.norm());
      } else {
        // The primal mass leaves a visible defect for absorbing media.
        CHECK((lit - d.coeffs).norm() > 1e-3 * d.coeffs.norm());
      }
    }
  }
}

TEST_CASE("correction solve basics") {
  MultigridWorkspace ws(DomainSpec{DomainKind::Square}, params_with(4.0), 4, 2);
  const LevelOperators& ops = ws.level(1);
  const Eigen::Index n = ops.system.dim();
  CHECK(correction_solve_primal(ops, Complex(2.0, 1.0), CVector::Zero(n)).norm() == 0.0);
  CHECK(correction_solve_dual(ops, Complex(2.0, 1.0), CVector::Zero(n)).norm() == 0.0);
  const CVector real_in = random_vector(n, 1, true);
  const CVector out = correction_solve_primal(ops, 2.5, real_in);
  CHECK(out.imag().norm() == 0.0);

  // Primal weak form on real test vectors:  vᵀ Ã ũ = vᵀ (-λ B + M_{k²n+1}) Pu.
  MultigridWorkspace wc(DomainSpec{DomainKind::Square}, params_with(Complex(4.0, 4.0)), 4, 2);
  const LevelOperators& oc = wc.level(1);
  const CVector pu = random_vector(n, 2);
  const Complex lam(1.7, -0.4);
  const CVector up = correction_solve_primal(oc, lam, pu);
  const ComplexSparseMatrix at = oc.system.atilde.cast<Complex>(), b = oc.system.b.cast<Complex>();
  for (int t = 0; t < 20; ++t) {
    const CVector v = random_vector(n, 100 + static_cast<std::uint64_t>(t), true);
    const Complex lhs = v.transpose() * (at * up);
    const Complex rhs = v.transpose() * (-lam * (b * pu) + oc.system.shifted_mass * pu);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(rhs) + 1.0));
  }
}

TEST_CASE("dual correction against the sesquilinear dual identity") {
  // ã(v, ũ*) = -conj(λ*) b(v, u*) + (v, (k²n + 1) u*)_0 for real v, every
  // term integrated element by element from its definition. The variant with
  // ((k²n + 1) v, u*)_0 is the one consistent with the dual eigenproblem.
  const ProblemParams params = params_with(Complex(4.0, 4.0));
  MultigridWorkspace ws(DomainSpec{DomainKind::SlitSquare}, params, 4, 2);
  const LevelOperators& ops = ws.level(1);
  const Mesh& mesh = ws.hierarchy().levels[1];
  const Eigen::Index n = ops.system.dim();
  const CVector us = random_vector(n, 31);
  const Complex lam_star(1.2, -0.8);

  const auto form = [&](const CVector& v, const CVector& w, const CVector& u_star, bool weight_on_test) {
    Complex lhs = 0.0, vol = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      const auto& t = mesh.elements[e];
      const Eigen::Matrix3d ke = element_stiffness(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
      const Eigen::Matrix3d me = element_mass(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
      const Complex c = params.k * params.k * params.n_at(centroid(mesh, e)) + 1.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          lhs += v(t[i]) * (ke(i, j) + me(i, j)) * std::conj(w(t[j]));
          vol += (weight_on_test ? c : std::conj(c)) * v(t[i]) * me(i, j) * std::conj(u_star(t[j]));
        }
    }
    Complex bnd = 0.0;
    for (const auto& be : mesh.boundary_edges) {
      const Point& p0 = mesh.vertices[be[0]];
      const Point& p1 = mesh.vertices[be[1]];
      const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
      const int ids[2] = {be[0], be[1]};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) bnd += v(ids[i]) * (len / 6.0) * (i == j ? 2.0 : 1.0) * std::conj(u_star(ids[j]));
    }
    return std::abs(lhs - (-std::conj(lam_star) * bnd + vol)) / (std::abs(lhs) + 1.0);
  };

  const CVector adj = correction_solve_dual(ops, lam_star, us, DualCorrectionForm::Adjoint);
  const CVector lit = correction_solve_dual(ops, lam_star, us, DualCorrectionForm::Literal);
  double lit_as_written = 0.0, lit_consistent = 0.0, adj_as_written = 0.0, adj_consistent = 0.0;
  for (int t = 0; t < 20; ++t) {
    const CVector v = random_vector(n, 200 + static_cast<std::uint64_t>(t), true);
    lit_as_written = std::max(lit_as_written, form(v, lit, us, false));
    lit_consistent = std::max(lit_consistent, form(v, lit, us, true));
    adj_as_written = std::max(adj_as_written, form(v, adj, us, false));
    adj_consistent = std::max(adj_consistent, form(v, adj, us, true));
  }
  CHECK(lit_as_written <= 1e-10);
  CHECK(adj_consistent <= 1e-10);
  // The two differ for absorbing media.
  CHECK(lit_consistent > 1e-4);
  CHECK(adj_as_written > 1e-4);
}

TEST_CASE("augmented space structure") {
  MultigridWorkspace ws(DomainSpec{DomainKind::Square}, params_with(Complex(4.0, 4.0)), 2, 2);
  const LevelOperators& ops = ws.level(1);
  const Eigen::Index n = ops.system.dim();
  REQUIRE(ops.from_coarse.cols() == 9);

  const AugmentedSpace z = build_augmented_space(ops, {random_vector(n, 7)}, {random_vector(n, 8)});
  CHECK(z.cols() == 11);
  CHECK(z.dropped == 0);
  CHECK(z.tags.size() == 11);
  CHECK(z.tags[0] == ColumnTag::CoarseHat);
  CHECK(z.tags[9] != ColumnTag::CoarseHat);
  // Coarse hats untouched.
  CHECK((RMatrix(z.coarse) - RMatrix(ops.from_coarse)).norm() == 0.0);
  // Extras are Ã-orthonormal and Ã-orthogonal to the coarse hats.
  const CMatrix at = RMatrix(ops.system.atilde).cast<Complex>();
  const CMatrix g = z.extra.adjoint() * at * z.extra;
  CHECK((g - CMatrix::Identity(2, 2)).norm() <= 1e-12);
  CHECK((z.extra.adjoint() * at * RMatrix(z.coarse).cast<Complex>()).norm() <= 1e-12);

  // Constants are reproduced by the hats.
  const CMatrix zd = z.dense();
  const CVector one = CVector::Ones(n);
  const CVector coef = zd.colPivHouseholderQr().solve(one);
  CHECK((zd * coef - one).norm() <= 1e-12 * one.norm());
  CHECK((z.map(coef) - zd * coef).norm() <= 1e-12);

  // A correction lying in span(P) is dropped, exactly once.
  CVector hat = CVector::Zero(9);
  hat(4) = 1.0;
  const CVector in_span = ops.from_coarse.cast<Complex>() * hat;
  const AugmentedSpace z2 = build_augmented_space(ops, {random_vector(n, 7)}, {in_span});
  CHECK(z2.dropped == 1);
  CHECK(z2.cols() == 10);
  CHECK(z2.tags.back() == ColumnTag::PrimalCorrection);

  // Duplicate corrections: the second copy is dependent.
  const CVector r = random_vector(n, 9);
  const AugmentedSpace z3 = build_augmented_space(ops, {r}, {Complex(0.0, 2.0) * r});
  CHECK(z3.dropped == 1);
}

TEST_CASE("identity space reproduces the direct solve") {
  MultigridWorkspace ws(DomainSpec{DomainKind::SlitSquare}, params_with(Complex(4.0, 4.0)), 8, 1);
  const LevelOperators& ops = ws.level(0);
  const DirectSolution sol = direct_solve(ops.system);
  AugmentedSpace z;
  z.coarse = identity(ops.system.dim());
  z.extra.resize(ops.system.dim(), 0);
  z.tags.assign(static_cast<std::size_t>(ops.system.dim()), ColumnTag::CoarseHat);
  std::vector<Complex> prev;
  for (const auto& p : sol.pairs) prev.push_back(p.lambda + Complex(1e-3, -1e-3));
  const AugmentedEigen e = solve_augmented_eigen(ops.system, z, prev);
  REQUIRE(e.primal.size() == sol.pairs.size());
  for (std::size_t j = 0; j < sol.pairs.size(); ++j) {
    CHECK(std::abs(e.primal[j].lambda - sol.pairs[j].lambda) <= 1e-10 * std::abs(sol.pairs[j].lambda));
    CHECK(std::abs(e.dual[j].lambda - std::conj(sol.pairs[j].lambda)) <= 1e-10 * std::abs(sol.pairs[j].lambda));
    CHECK(residual(ops.system.a, ops.system.b, e.primal[j]) <= 1e-10);
    CHECK(residual(ops.system.a, ops.system.b, e.dual[j]) <= 1e-10);
    CHECK(e.primal_residuals[j] <= 1e-10);
  }
  CHECK(e.pencil_dim == ops.system.dim());

  std::vector<Complex> far = {Complex(100.0, 0.0)};
  CHECK_THROWS_AS(solve_augmented_eigen(ops.system, z, far), TrackingError);
}

TEST_CASE("exact fine pairs are kept by a correction step") {
  MultigridWorkspace ws(DomainSpec{DomainKind::Square}, params_with(Complex(4.0, 4.0)), 4, 2);
  const LevelOperators& ops = ws.level(1);
  const CorrectionState s = exact_state(ops, {1, 2});
  MultigridConfig cfg;
  cfg.cluster_size = 2;
  const CorrectionState t = correction_step(ops, identity(ops.system.dim()), s, cfg);
  REQUIRE(t.primal.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(t.primal[j].lambda - s.primal[j].lambda) <= 1e-9);
    CHECK(std::abs(t.dual[j].lambda - s.dual[j].lambda) <= 1e-9);
    CHECK(residual(ops.system.a, ops.system.b, t.primal[j]) <= 1e-9);
  }
  CHECK(t.level == s.level + 1);
  CHECK(t.history.size() == 1);
}

TEST_CASE("square 8 to 16 tracks the first eigenvalue") {
  MultigridConfig cfg;
  cfg.domain = DomainSpec{DomainKind::Square};
  cfg.params = params_with(4.0);
  cfg.n_div_coarse = 8;
  cfg.n_levels = 2;
  const MultigridResult r = multigrid_solve(cfg);
  const DirectSolution ref = direct_solve(build_initial_mesh(cfg.domain, 16), cfg.params);
  CHECK(std::abs(r.cluster.primal[0].lambda - ref.pairs[0].lambda) <= 1e-6 * std::abs(ref.pairs[0].lambda));
  CHECK(std::abs(r.cluster.dual[0].lambda - std::conj(r.cluster.primal[0].lambda)) <= 1e-9);
}

TEST_CASE("one step equals an independent dense construction") {
  // Plain dense Eigen: coarse pair, one correction, Galerkin pencil on [P | ũ].
  ProblemParams p = params_with(4.0);
  const MeshHierarchy h = build_hierarchy(DomainSpec{DomainKind::Square}, 8, 2);
  const SteklovSystem sc = assemble_system(h.levels[0], p), sf = assemble_system(h.levels[1], p);
  const RMatrix pm(h.prolongations[0]);
  const auto top_eig = [](const RMatrix& a, const RMatrix& b, double near, double radius) {
    Eigen::EigenSolver<RMatrix> es(a.partialPivLu().solve(b));
    double best = -1e300;
    int arg = -1;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      const Complex mu = es.eigenvalues()(i);
      if (std::abs(mu) < 1e-8) continue;
      const double l = (-1.0 / mu).real();
      if (std::abs(l - near) <= radius && l > best) {
        best = l;
        arg = i;
      }
    }
    return std::make_pair(best, RVector(es.eigenvectors().col(arg).real()));
  };
  const auto [lc, uc] = top_eig(CMatrix(sc.a).real(), RMatrix(sc.b), 0.0, 1e300);
  const RVector pu = pm * uc;
  const RMatrix at(sf.atilde), bf(sf.b);
  const RVector ut = at.llt().solve(-lc * (bf * pu) + CMatrix(sf.shifted_mass).real() * pu);
  RMatrix z(pm.rows(), pm.cols() + 1);
  z << pm, ut;
  const double lf = top_eig(z.transpose() * CMatrix(sf.a).real() * z, z.transpose() * bf * z, lc, 0.5).first;

  MultigridConfig cfg;
  cfg.domain = DomainSpec{DomainKind::Square};
  cfg.params = p;
  cfg.n_div_coarse = 8;
  cfg.n_levels = 2;
  const MultigridResult r = multigrid_solve(cfg);
  CHECK(std::abs(r.state.history[0].primal[0] - lc) <= 1e-11);
  CHECK(std::abs(r.cluster.primal[0].lambda - lf) <= 1e-10);
}

TEST_CASE("one step error shrinks at high order") {
  // |λ_mg - λ_h| behaves like H⁴ on the convex square; halving H should gain
  // well over a factor 8.
  std::vector<double> err;
  for (int c : {4, 8, 16}) {
    MultigridConfig cfg;
    cfg.domain = DomainSpec{DomainKind::Square};
    cfg.params = params_with(4.0);
    cfg.n_div_coarse = c;
    cfg.n_levels = 2;
    const MultigridResult r = multigrid_solve(cfg);
    const DirectSolution ref = direct_solve(build_initial_mesh(cfg.domain, 2 * c), cfg.params);
    err.push_back(std::abs(r.cluster.primal[0].lambda - ref.pairs[0].lambda));
  }
  CHECK(err[0] / err[1] >= 8.0);
  CHECK(err[1] / err[2] >= 8.0);
}

TEST_CASE("one step moves the coarse eigenvalue toward the fine one") {
  for (DomainKind d : {DomainKind::Square, DomainKind::LShape, DomainKind::SlitSquare}) {
    CAPTURE(DomainSpec{d}.name());
    MultigridConfig cfg;
    cfg.domain = DomainSpec{d};
    cfg.params = params_with(Complex(4.0, 4.0));
    cfg.n_div_coarse = 8;
    cfg.n_levels = 2;
    cfg.cluster_start = 1;
    const MultigridResult r = multigrid_solve(cfg);
    const Mesh fine = build_initial_mesh(DomainSpec{d}, 16);
    DirectOptions o;
    o.n_wanted = 12;
    const DirectSolution ref = direct_solve(fine, cfg.params, o);
    // Fine eigenvalue nearest to the tracked coarse one.
    const Complex coarse = r.state.history[0].primal[0];
    Complex target = ref.pairs[0].lambda;
    for (const auto& p : ref.pairs)
      if (std::abs(p.lambda - coarse) < std::abs(target - coarse)) target = p.lambda;
    const double coarse_err = std::abs(coarse - target);
    const double mg_err = std::abs(r.cluster.primal[0].lambda - target);
    CHECK(mg_err <= 1e-2 * coarse_err);
    CHECK(std::abs(r.cluster.dual[0].lambda - std::conj(r.cluster.primal[0].lambda)) <= 1e-9);
    CHECK(r.state.history.size() == 2);
    CHECK(r.peak_pencil_dim == r.coarse_dim + 2);
    CHECK(r.state.history[1].pencil_dim == r.coarse_dim + 2);
    CHECK(r.state.history[1].primal_residuals[0] <= 1e-10);
  }
}

TEST_CASE("multigrid is deterministic and a single level is the coarse solve") {
  MultigridConfig cfg;
  cfg.domain = DomainSpec{DomainKind::LShape};
  cfg.params = params_with(4.0);
  cfg.n_div_coarse = 4;
  cfg.n_levels = 1;
  cfg.cluster_start = 2;
  const MultigridResult one = multigrid_solve(cfg);
  // The second largest real part over the whole finite spectrum.
  const SteklovSystem sys = assemble_system(build_initial_mesh(cfg.domain, 4), cfg.params);
  std::vector<Complex> all = dense_geneig(DensePencil{CMatrix(sys.a), RMatrix(sys.b).cast<Complex>()}).eigenvalues;
  std::sort(all.begin(), all.end(), eigenvalue_order);
  CHECK(std::abs(one.cluster.primal[0].lambda - all[1]) <= 1e-10);
  CHECK(one.state.history.size() == 1);

  cfg.n_levels = 3;
  const MultigridResult a = multigrid_solve(cfg);
  const MultigridResult b = multigrid_solve(cfg);
  CHECK(a.cluster.primal[0].lambda == b.cluster.primal[0].lambda);
  CHECK(a.cluster.primal[0].coeffs == b.cluster.primal[0].coeffs);
  // Real problems stay real.
  CHECK(std::abs(a.cluster.primal[0].lambda.imag()) <= 1e-12);
}

TEST_CASE("cluster selection by targets") {
  MultigridConfig cfg;
  cfg.domain = DomainSpec{DomainKind::Square};
  cfg.params = params_with(4.0);
  cfg.n_div_coarse = 4;
  cfg.n_levels = 1;
  const DirectSolution d = direct_solve(build_initial_mesh(cfg.domain, 4), cfg.params);
  cfg.cluster_size = 2;
  cfg.cluster_targets = {d.pairs[3].lambda + 1e-3, d.pairs[0].lambda - 1e-3};
  MultigridWorkspace ws(cfg.domain, cfg.params, 4, 1);
  const CorrectionState s = coarse_solve(ws, cfg);
  CHECK(std::abs(s.primal[0].lambda - d.pairs[3].lambda) <= 1e-10);
  CHECK(std::abs(s.primal[1].lambda - d.pairs[0].lambda) <= 1e-10);
}

TEST_CASE("greedy matching") {
  const std::vector<Complex> cand = {1.0, 2.0, 3.0, Complex(2.0, 0.1)};
  auto m = greedy_match(cand, {Complex(2.05, 0.0), Complex(2.0, 0.0)});
  CHECK(m[1] == 1);
  CHECK(m[0] == 3);
  m = greedy_match(cand, {0.0});
  CHECK(m[0] == 0);
  CHECK_THROWS_AS(greedy_match({1.0}, {1.0, 2.0}), TrackingError);
}

TEST_CASE("configuration checks") {
  MultigridConfig c;
  CHECK_NOTHROW(c.check());
  MultigridConfig bad = c;
  bad.n_levels = 0;
  CHECK_THROWS_AS(bad.check(), ParameterError);
  bad = c;
  bad.cluster_size = 0;
  CHECK_THROWS_AS(bad.check(), ParameterError);
  bad = c;
  bad.n_div_coarse = 3;
  CHECK_THROWS_AS(bad.check(), ParameterError);
  bad = c;
  bad.cluster_targets = {1.0, 2.0};
  CHECK_THROWS_AS(bad.check(), ParameterError);
  bad = c;
  bad.drop_tol = 0.0;
  CHECK_THROWS_AS(bad.check(), ParameterError);

  MultigridConfig far = c;
  far.n_div_coarse = 2;
  far.n_levels = 1;
  far.cluster_start = 50;
  CHECK_THROWS_AS(multigrid_solve(far), TrackingError);
}

TEST_CASE("boundary pairing diagnostics") {
  MultigridWorkspace ws(DomainSpec{DomainKind::Square}, params_with(Complex(4.0, 4.0)), 4, 1);
  const LevelOperators& ops = ws.level(0);
  const CorrectionState s = exact_state(ops, {1, 2});
  const A0Diagnostics a = check_assumption_A0(s.primal, s.dual, ops.system.b);
  REQUIRE(a.g.rows() == 2);
  const CMatrix bm = RMatrix(ops.system.b).cast<Complex>();
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 2; ++t) {
      const Complex manual = s.dual[static_cast<std::size_t>(t)].coeffs.adjoint() * bm * s.primal[static_cast<std::size_t>(j)].coeffs;
      CHECK(std::abs(a.g(j, t) - manual) <= 1e-13);
    }
  // Exact pairs are B-biorthogonal across distinct eigenvalues.
  CHECK(a.max_off_diagonal <= 1e-8);
  CHECK(a.min_diagonal > 0.1);
  CHECK(a.warnings.empty());

  // A dual orthogonal to its primal triggers the warning.
  std::vector<EigenPair> d = s.dual;
  d[0] = s.dual[1];
  const A0Diagnostics w = check_assumption_A0(s.primal, d, ops.system.b);
  CHECK_FALSE(w.warnings.empty());

  A0Diagnostics x, y;
  x.max_off_diagonal = 1e-3;
  y.max_off_diagonal = 1e-2;
  CHECK(a0_trend_warnings({x, y}).size() == 1);
  CHECK(a0_trend_warnings({y, x}).empty());
}
