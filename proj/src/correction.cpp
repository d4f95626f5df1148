#include "steklov/correction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace steklov {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double atilde_norm(const RealSparseMatrix& atilde, const CVector& x) {
  return std::sqrt(std::max(0.0, x.dot(atilde.cast<Complex>() * x).real()));
}

ComplexSparseMatrix conjugated(const ComplexSparseMatrix& m) { return ComplexSparseMatrix(m.conjugate()); }

std::vector<Complex> lambdas(const std::vector<EigenPair>& pairs) {
  std::vector<Complex> out;
  for (const auto& p : pairs) out.push_back(p.lambda);
  return out;
}

LevelRecord make_record(int level, const SteklovSystem& sys, const std::vector<EigenPair>& primal,
                        const std::vector<EigenPair>& dual) {
  LevelRecord rec;
  rec.level = level;
  rec.h = sys.h;
  rec.dofs = sys.dim();
  rec.primal = lambdas(primal);
  rec.dual = lambdas(dual);
  for (const auto& p : primal) rec.fine_residuals.push_back(residual(sys.a, sys.b, p));
  rec.a0 = check_assumption_A0(primal, dual, sys.b);
  return rec;
}

}  // namespace

void MultigridConfig::check() const {
  if (n_div_coarse < 2 || n_div_coarse % 2 != 0) throw ParameterError("multigrid: n_div_coarse must be even and >= 2");
  if (n_levels < 1) throw ParameterError("multigrid: n_levels must be >= 1");
  if (cluster_size < 1) throw ParameterError("multigrid: cluster size q must be >= 1");
  if (cluster_targets.empty() && cluster_start < 1) throw ParameterError("multigrid: cluster start must be >= 1");
  if (!cluster_targets.empty() && static_cast<int>(cluster_targets.size()) != cluster_size)
    throw ParameterError("multigrid: number of cluster targets must equal q");
  if (!(drop_tol > 0.0 && drop_tol < 1.0)) throw ParameterError("multigrid: drop tolerance must lie in (0, 1)");
  if (!(params.k > 0.0)) throw ParameterError("multigrid: k must be positive");
}

LevelOperators build_level_operators(const Mesh& mesh, const ProblemParams& params,
                                     const RealSparseMatrix& from_coarse) {
  LevelOperators ops;
  ops.system = assemble_system(mesh, params);
  ops.dual_shifted_mass = conjugated(ops.system.shifted_mass);
  ops.atilde_factor = SpdFactor(ops.system.atilde);
  ops.from_coarse = from_coarse;
  const RealSparseMatrix gram = RealSparseMatrix(from_coarse.transpose()) * (ops.system.atilde * from_coarse);
  // Symmetrize away rounding so the factorization accepts the Gram matrix.
  const RealSparseMatrix sym = 0.5 * (gram + RealSparseMatrix(gram.transpose()));
  ops.coarse_gram = SpdFactor(sym);
  return ops;
}

MultigridWorkspace::MultigridWorkspace(const DomainSpec& domain, const ProblemParams& params, int n_div_coarse,
                                       int n_levels)
    : params_(params), n_div_coarse_(n_div_coarse), hierarchy_(build_hierarchy(domain, n_div_coarse, n_levels)) {}

const LevelOperators& MultigridWorkspace::level(int l) {
  if (l < 0 || l >= n_levels()) throw ParameterError("MultigridWorkspace: level out of range");
  auto it = levels_.find(l);
  if (it == levels_.end()) {
    auto ops = std::make_unique<LevelOperators>(
        build_level_operators(hierarchy_.levels[static_cast<std::size_t>(l)], params_,
                              hierarchy_.composed(0, static_cast<std::size_t>(l))));
    it = levels_.emplace(l, std::move(ops)).first;
  }
  return *it->second;
}

namespace {

CVector correction_solve(const LevelOperators& ops, const ComplexSparseMatrix& mass, Complex lambda,
                         const CVector& pu) {
  if (pu.size() != ops.system.dim()) throw ParameterError("correction solve: vector has wrong size");
  const CVector rhs = -lambda * (ops.system.b.cast<Complex>() * pu) + mass * pu;
  return ops.atilde_factor.solve(rhs);
}

}  // namespace

CVector correction_solve_primal(const LevelOperators& ops, Complex lambda, const CVector& pu) {
  return correction_solve(ops, ops.system.shifted_mass, lambda, pu);
}

CVector correction_solve_dual(const LevelOperators& ops, Complex lambda_star, const CVector& pu_star,
                              DualCorrectionForm form) {
  const ComplexSparseMatrix& mass =
      form == DualCorrectionForm::Adjoint ? ops.dual_shifted_mass : ops.system.shifted_mass;
  return correction_solve(ops, mass, lambda_star, pu_star);
}

CMatrix AugmentedSpace::dense() const {
  CMatrix z(rows(), cols());
  z.leftCols(coarse.cols()) = CMatrix(RMatrix(coarse).cast<Complex>());
  z.rightCols(extra.cols()) = extra;
  return z;
}

CVector AugmentedSpace::map(const CVector& x) const {
  if (x.size() != cols()) throw ParameterError("AugmentedSpace::map: coefficient vector has wrong size");
  const Eigen::Index nc = coarse.cols();
  CVector out = coarse.cast<Complex>() * x.head(nc);
  if (extra.cols() > 0) out.noalias() += extra * x.tail(extra.cols());
  return out;
}

AugmentedSpace build_augmented_space(const RealSparseMatrix& coarse, const RealSparseMatrix& atilde,
                                     const SpdFactor& coarse_gram, const std::vector<CVector>& corrections,
                                     const std::vector<ColumnTag>& tags, double drop_tol) {
  if (tags.size() != corrections.size()) throw ParameterError("build_augmented_space: one tag per correction vector");
  if (coarse.rows() != atilde.rows() || coarse_gram.dim() != coarse.cols())
    throw ParameterError("build_augmented_space: dimension mismatch");
  const ComplexSparseMatrix pc = coarse.cast<Complex>();
  const ComplexSparseMatrix ac = atilde.cast<Complex>();

  AugmentedSpace z;
  z.coarse = coarse;
  z.tags.assign(static_cast<std::size_t>(coarse.cols()), ColumnTag::CoarseHat);

  // Project out span(P) in the Ã inner product.
  std::vector<CVector> work;
  std::vector<double> original;
  for (const auto& c : corrections) {
    if (c.size() != coarse.rows()) throw ParameterError("build_augmented_space: correction vector has wrong size");
    const double n0 = atilde_norm(atilde, c);
    CVector w = c;
    if (n0 > 0.0) {
      for (int pass = 0; pass < 2; ++pass) {
        const CVector coef = coarse_gram.solve(CVector(pc.transpose() * (ac * w)));
        w.noalias() -= pc * coef;
      }
    }
    work.push_back(std::move(w));
    original.push_back(n0);
  }

  // Modified Gram-Schmidt with column pivoting among the corrections.
  std::vector<bool> done(work.size(), false);
  std::vector<CVector> kept;
  std::vector<ColumnTag> kept_tags;
  for (std::size_t step = 0; step < work.size(); ++step) {
    std::size_t best = work.size();
    double best_ratio = -1.0;
    for (std::size_t j = 0; j < work.size(); ++j) {
      if (done[j]) continue;
      const double ratio = original[j] > 0.0 ? atilde_norm(atilde, work[j]) / original[j] : 0.0;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = j;
      }
    }
    done[best] = true;
    if (!(best_ratio > drop_tol)) {
      ++z.dropped;
      continue;
    }
    CVector q = work[best] / atilde_norm(atilde, work[best]);
    for (std::size_t j = 0; j < work.size(); ++j) {
      if (done[j]) continue;
      for (int pass = 0; pass < 2; ++pass) {
        const Complex r = q.dot(ac * work[j]);
        work[j] -= r * q;
      }
    }
    kept.push_back(std::move(q));
    kept_tags.push_back(tags[best]);
  }

  z.extra.resize(coarse.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) z.extra.col(static_cast<Eigen::Index>(j)) = kept[j];
  z.tags.insert(z.tags.end(), kept_tags.begin(), kept_tags.end());
  return z;
}

AugmentedSpace build_augmented_space(const LevelOperators& ops, const std::vector<CVector>& primal,
                                     const std::vector<CVector>& dual, double drop_tol) {
  std::vector<CVector> all = primal;
  all.insert(all.end(), dual.begin(), dual.end());
  std::vector<ColumnTag> tags(primal.size(), ColumnTag::PrimalCorrection);
  tags.insert(tags.end(), dual.size(), ColumnTag::DualCorrection);
  return build_augmented_space(ops.from_coarse, ops.system.atilde, ops.coarse_gram, all, tags, drop_tol);
}

std::vector<std::size_t> greedy_match(const std::vector<Complex>& candidates, const std::vector<Complex>& targets) {
  if (candidates.size() < targets.size()) throw TrackingError("fewer eigenvalue candidates than tracked eigenvalues");
  struct Entry {
    double d;
    std::size_t t;
    std::size_t c;
  };
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (std::size_t c = 0; c < candidates.size(); ++c) entries.push_back({std::abs(candidates[c] - targets[t]), t, c});
  std::stable_sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.c != b.c) return eigenvalue_order(candidates[a.c], candidates[b.c]);
    return a.t < b.t;
  });
  std::vector<std::size_t> result(targets.size(), candidates.size());
  std::vector<bool> used_t(targets.size(), false), used_c(candidates.size(), false);
  for (const auto& e : entries) {
    if (used_t[e.t] || used_c[e.c]) continue;
    used_t[e.t] = used_c[e.c] = true;
    result[e.t] = e.c;
  }
  return result;
}

AugmentedEigen solve_augmented_eigen(const SteklovSystem& fine, const AugmentedSpace& z,
                                     const std::vector<Complex>& previous, double tracking_radius) {
  if (z.rows() != fine.dim()) throw ParameterError("solve_augmented_eigen: dimension mismatch");
  const Eigen::Index nc = z.coarse.cols();
  const Eigen::Index ne = z.extra.cols();
  const Eigen::Index m = nc + ne;
  const ComplexSparseMatrix pc = z.coarse.cast<Complex>();
  const ComplexSparseMatrix bc = fine.b.cast<Complex>();

  // Blockwise projection keeps the coarse part sparse.
  auto project = [&](const ComplexSparseMatrix& x) {
    CMatrix out(m, m);
    const ComplexSparseMatrix xp = x * pc;
    out.topLeftCorner(nc, nc) = CMatrix(ComplexSparseMatrix(pc.transpose() * xp));
    if (ne > 0) {
      const CMatrix xe = x * z.extra;
      out.topRightCorner(nc, ne) = pc.transpose() * xe;
      out.bottomLeftCorner(ne, nc) = z.extra.adjoint() * xp;
      out.bottomRightCorner(ne, ne) = z.extra.adjoint() * xe;
    }
    return out;
  };
  DensePencil pencil{project(fine.a), project(bc)};
  pencil.b = 0.5 * (pencil.b + CMatrix(pencil.b.adjoint()));

  const EigenSolution sol = dense_geneig(pencil);
  const auto pick = greedy_match(sol.eigenvalues, previous);

  AugmentedEigen out;
  out.pencil_dim = m;
  for (std::size_t t = 0; t < previous.size(); ++t) {
    const std::size_t j = pick[t];
    const Complex lam = sol.eigenvalues[j];
    if (std::abs(lam - previous[t]) > tracking_radius * std::max(1.0, std::abs(previous[t]))) {
      std::ostringstream msg;
      msg << "solve_augmented_eigen: no eigenvalue near " << previous[t] << " (closest " << lam << ")";
      throw TrackingError(msg.str());
    }
    const auto col = static_cast<Eigen::Index>(j);
    EigenPair p;
    p.lambda = lam;
    p.coeffs = z.map(sol.right_vectors.col(col));
    normalize_pair(fine.b, p);
    EigenPair d;
    d.is_dual = true;
    if (sol.left_vectors.col(col).norm() == 0.0) throw TrackingError("solve_augmented_eigen: dual eigenvector missing");
    d.coeffs = z.map(sol.left_vectors.col(col));
    // Eigenvalue of the conjugate-transpose pencil, re-evaluated from its vector.
    const CVector xd = sol.left_vectors.col(col);
    const CVector axd = pencil.a.adjoint() * xd;
    const CVector bxd = pencil.b * xd;
    d.lambda = -xd.dot(axd) / xd.dot(bxd);
    normalize_pair(fine.b, d);
    out.primal_residuals.push_back(sol.residuals[j]);
    out.dual_residuals.push_back(pencil_residual(pencil.a.adjoint(), pencil.b, d.lambda, xd));
    out.primal.push_back(std::move(p));
    out.dual.push_back(std::move(d));
  }
  return out;
}

CorrectionState correction_step(const LevelOperators& fine, const RealSparseMatrix& prolong,
                                const CorrectionState& state, const MultigridConfig& config) {
  const auto t0 = Clock::now();
  if (prolong.rows() != fine.system.dim()) throw ParameterError("correction_step: prolongation has wrong row count");
  if (state.primal.size() != state.dual.size() || state.primal.empty())
    throw ParameterError("correction_step: state must hold q primal and q dual pairs");
  const ComplexSparseMatrix pc = prolong.cast<Complex>();

  std::vector<CVector> up, ud;
  for (std::size_t j = 0; j < state.primal.size(); ++j) {
    up.push_back(correction_solve_primal(fine, state.primal[j].lambda, pc * state.primal[j].coeffs));
    ud.push_back(correction_solve_dual(fine, state.dual[j].lambda, pc * state.dual[j].coeffs, config.dual_form));
  }
  const AugmentedSpace z = build_augmented_space(fine, up, ud, config.drop_tol);
  const AugmentedEigen eig = solve_augmented_eigen(fine.system, z, lambdas(state.primal), config.tracking_radius);

  CorrectionState next;
  next.level = state.level + 1;
  next.primal = eig.primal;
  next.dual = eig.dual;
  next.history = state.history;
  LevelRecord rec = make_record(next.level, fine.system, next.primal, next.dual);
  rec.pencil_dim = eig.pencil_dim;
  rec.dropped_columns = z.dropped;
  rec.primal_residuals = eig.primal_residuals;
  rec.dual_residuals = eig.dual_residuals;
  rec.seconds = seconds_since(t0);
  next.history.push_back(std::move(rec));
  return next;
}

CorrectionState one_correction_step(MultigridWorkspace& ws, const CorrectionState& state,
                                    const MultigridConfig& config) {
  const int l = state.level;
  if (l + 1 >= ws.n_levels()) throw ParameterError("one_correction_step: no finer level in the hierarchy");
  const LevelOperators& fine = ws.level(l + 1);
  return correction_step(fine, ws.hierarchy().prolongations[static_cast<std::size_t>(l)], state, config);
}

CorrectionState coarse_solve(MultigridWorkspace& ws, const MultigridConfig& config) {
  const auto t0 = Clock::now();
  const LevelOperators& ops = ws.level(0);
  const SteklovSystem& sys = ops.system;
  if (static_cast<std::size_t>(sys.dim()) > config.dense_cap)
    throw ParameterError("coarse_solve: coarse dimension exceeds the dense cap");
  DensePencil pencil{CMatrix(sys.a), CMatrix(RMatrix(sys.b).cast<Complex>())};
  const EigenSolution sol = dense_geneig(pencil);

  std::vector<std::size_t> order(sol.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eigenvalue_order(sol.eigenvalues[a], sol.eigenvalues[b]);
  });
  const auto q = static_cast<std::size_t>(config.cluster_size);
  std::vector<std::size_t> chosen;
  if (!config.cluster_targets.empty()) {
    std::vector<Complex> sorted;
    for (auto j : order) sorted.push_back(sol.eigenvalues[j]);
    for (auto k : greedy_match(sorted, config.cluster_targets)) chosen.push_back(order[k]);
  } else {
    const auto start = static_cast<std::size_t>(config.cluster_start - 1);
    if (start + q > order.size()) throw TrackingError("coarse_solve: cluster index beyond the finite coarse spectrum");
    for (std::size_t t = 0; t < q; ++t) chosen.push_back(order[start + t]);
  }

  CorrectionState state;
  state.level = 0;
  const CMatrix ah = pencil.a.adjoint();
  std::vector<double> pres, dres;
  for (auto j : chosen) {
    const auto col = static_cast<Eigen::Index>(j);
    EigenPair p;
    p.lambda = sol.eigenvalues[j];
    p.coeffs = sol.right_vectors.col(col);
    normalize_pair(sys.b, p);
    EigenPair d;
    d.is_dual = true;
    d.coeffs = sol.left_vectors.col(col);
    if (d.coeffs.norm() == 0.0) throw TrackingError("coarse_solve: dual eigenvector missing");
    const CVector axd = ah * d.coeffs;
    const CVector bxd = pencil.b * d.coeffs;
    d.lambda = -d.coeffs.dot(axd) / d.coeffs.dot(bxd);
    normalize_pair(sys.b, d);
    pres.push_back(sol.residuals[j]);
    dres.push_back(pencil_residual(ah, pencil.b, d.lambda, d.coeffs));
    state.primal.push_back(std::move(p));
    state.dual.push_back(std::move(d));
  }
  LevelRecord rec = make_record(0, sys, state.primal, state.dual);
  rec.pencil_dim = sys.dim();
  rec.primal_residuals = pres;
  rec.dual_residuals = dres;
  rec.seconds = seconds_since(t0);
  state.history.push_back(std::move(rec));
  return state;
}

MultigridResult multigrid_solve(MultigridWorkspace& ws, const MultigridConfig& config) {
  config.check();
  if (config.n_levels > ws.n_levels()) throw ParameterError("multigrid_solve: workspace has too few levels");
  const auto t0 = Clock::now();
  MultigridResult result;
  result.state = coarse_solve(ws, config);
  for (int l = 0; l + 1 < config.n_levels; ++l) result.state = one_correction_step(ws, result.state, config);
  result.seconds = seconds_since(t0);
  result.coarse_dim = ws.level(0).system.dim();
  for (const auto& rec : result.state.history) result.peak_pencil_dim = std::max(result.peak_pencil_dim, rec.pencil_dim);
  result.cluster.start_index = config.cluster_start;
  result.cluster.q = config.cluster_size;
  result.cluster.primal = result.state.primal;
  result.cluster.dual = result.state.dual;
  return result;
}

MultigridResult multigrid_solve(const MultigridConfig& config) {
  config.check();
  const auto t0 = Clock::now();
  MultigridWorkspace ws(config.domain, config.params, config.n_div_coarse, config.n_levels);
  MultigridResult result = multigrid_solve(ws, config);
  result.seconds = seconds_since(t0);
  return result;
}

A0Diagnostics check_assumption_A0(const std::vector<EigenPair>& primal, const std::vector<EigenPair>& dual,
                                  const RealSparseMatrix& b) {
  A0Diagnostics diag;
  const auto q = static_cast<Eigen::Index>(std::min(primal.size(), dual.size()));
  diag.g = CMatrix::Zero(q, q);
  const ComplexSparseMatrix bc = b.cast<Complex>();
  for (Eigen::Index j = 0; j < q; ++j) {
    const CVector bu = bc * primal[static_cast<std::size_t>(j)].coeffs;
    for (Eigen::Index s = 0; s < q; ++s) diag.g(j, s) = dual[static_cast<std::size_t>(s)].coeffs.dot(bu);
  }
  diag.min_diagonal = q > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    diag.min_diagonal = std::min(diag.min_diagonal, std::abs(diag.g(j, j)));
    for (Eigen::Index s = 0; s < q; ++s)
      if (s != j) diag.max_off_diagonal = std::max(diag.max_off_diagonal, std::abs(diag.g(j, s)));
  }
  if (q > 0 && diag.min_diagonal < 0.1) {
    std::ostringstream msg;
    msg << "boundary pairing nearly degenerate: min |G_jj| = " << diag.min_diagonal;
    diag.warnings.push_back(msg.str());
  }
  return diag;
}

std::vector<std::string> a0_trend_warnings(const std::vector<A0Diagnostics>& sequence) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < sequence.size(); ++i) {
    if (sequence[i].max_off_diagonal > sequence[i - 1].max_off_diagonal && sequence[i].max_off_diagonal > 1e-12) {
      std::ostringstream msg;
      msg << "off-diagonal pairing grew from " << sequence[i - 1].max_off_diagonal << " to "
          << sequence[i].max_off_diagonal << " at step " << i;
      out.push_back(msg.str());
    }
  }
  return out;
}

}  // namespace steklov
