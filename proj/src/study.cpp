#include "steklov/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace steklov {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

DomainKind parse_domain(const std::string& s) { return DomainSpec::parse(s).kind; }

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: invalid value for '") + key + "': " + e.what());
  }
}

// Tracked group: either positions in the eigenvalue ordering or reference targets.
struct Group {
  std::vector<int> labels;
  std::vector<Complex> targets;     // empty: use ordering positions
  std::vector<Complex> references;  // empty when unavailable
};

unsigned thread_cap() {
  if (const char* env = std::getenv("STEKLOV_MG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs all jobs with at most `cap` of them in flight; results keep job order.
template <class R>
std::vector<R> run_limited(std::vector<std::function<R()>> jobs, unsigned cap) {
  std::vector<R> out(jobs.size());
  if (cap <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i]();
    return out;
  }
  for (std::size_t begin = 0; begin < jobs.size(); begin += cap) {
    std::vector<std::future<R>> batch;
    const std::size_t end = std::min(jobs.size(), begin + cap);
    for (std::size_t i = begin; i < end; ++i) batch.push_back(std::async(std::launch::async, jobs[i]));
    for (std::size_t i = begin; i < end; ++i) out[i] = batch[i - begin].get();
  }
  return out;
}

// Picks the tracked eigenvalues of `group` from a direct spectrum.
std::vector<std::size_t> pick(const std::vector<EigenPair>& pairs, const Group& group) {
  std::vector<Complex> values;
  for (const auto& p : pairs) values.push_back(p.lambda);
  if (!group.targets.empty()) return greedy_match(values, group.targets);
  std::vector<std::size_t> idx;
  for (int l : group.labels) {
    if (l < 1 || static_cast<std::size_t>(l) > values.size())
      throw TrackingError("eigenvalue index beyond the computed spectrum");
    idx.push_back(static_cast<std::size_t>(l - 1));
  }
  return idx;
}

void fill_orders(std::vector<StudyRow>& rows) {
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> series;
  for (std::size_t i = 0; i < rows.size(); ++i) series[{rows[i].method, rows[i].j}].push_back(i);
  for (auto& [key, idx] : series) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].h > rows[b].h; });
    for (std::size_t t = 1; t < idx.size(); ++t) {
      const StudyRow& prev = rows[idx[t - 1]];
      StudyRow& cur = rows[idx[t]];
      if (prev.abs_error && cur.abs_error) cur.order = observed_order(*prev.abs_error, *cur.abs_error, prev.h, cur.h);
    }
  }
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::Multigrid: return "multigrid";
    case Method::Both: return "both";
  }
  return "direct";
}

Method parse_method(const std::string& s) {
  if (s == "direct") return Method::Direct;
  if (s == "multigrid") return Method::Multigrid;
  if (s == "both") return Method::Both;
  throw ParameterError("unknown method '" + s + "' (expected direct, multigrid or both)");
}

ProblemParams ExperimentConfig::params() const {
  ProblemParams p;
  p.k = k;
  p.n = n;
  return p;
}

DirectOptions ExperimentConfig::direct_options() const {
  DirectOptions o;
  o.n_wanted = wanted;
  o.arnoldi_tol = arnoldi_tol;
  o.inner_tol = inner_tol;
  o.dense_cap = dense_cap;
  o.seed = seed;
  return o;
}

void ExperimentConfig::check() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ParameterError("config: k must be positive");
  if (!std::isfinite(n.real()) || !std::isfinite(n.imag())) throw ParameterError("config: n must be finite");
  for (int d : n_divs)
    if (d < 2 || d % 2 != 0) throw ParameterError("config: every n_div must be even and >= 2");
  if (coarse < 2 || coarse % 2 != 0) throw ParameterError("config: coarse n_div must be even and >= 2");
  if (levels < 1) throw ParameterError("config: levels must be >= 1");
  if (cluster && (cluster->start < 1 || cluster->size < 1)) throw ParameterError("config: cluster needs i >= 1, q >= 1");
  if (wanted < 1) throw ParameterError("config: wanted must be >= 1");
  if (!(arnoldi_tol > 0.0) || !(inner_tol > 0.0) || !(drop_tol > 0.0))
    throw ParameterError("config: tolerances must be positive");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["domain"] = DomainSpec{c.domain}.name();
  j["k"] = c.k;
  j["n"] = {{"re", c.n.real()}, {"im", c.n.imag()}};
  j["method"] = method_name(c.method);
  j["n_divs"] = c.n_divs;
  j["coarse"] = c.coarse;
  j["levels"] = c.levels;
  if (c.cluster) j["cluster"] = {{"i", c.cluster->start}, {"q", c.cluster->size}};
  j["wanted"] = c.wanted;
  j["tolerances"] = {{"arnoldi", c.arnoldi_tol}, {"inner", c.inner_tol}, {"drop", c.drop_tol}};
  j["dense_cap"] = c.dense_cap;
  j["direct_max_dofs"] = c.direct_max_dofs;
  j["output"] = {{"dir", c.out_dir}, {"prefix", c.prefix}};
  j["seed"] = c.seed;
  j["timings"] = c.timings;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("config: top level must be a JSON object");
  static const std::set<std::string> known = {"domain", "k",          "n",          "method",          "n_divs",
                                              "coarse", "levels",     "cluster",    "wanted",          "tolerances",
                                              "dense_cap", "direct_max_dofs", "output", "seed", "timings"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ParameterError("config: unknown key '" + item.key() + "'");

  ExperimentConfig c;
  if (j.contains("domain")) c.domain = parse_domain(get_as<std::string>(j, "domain"));
  if (j.contains("k")) c.k = get_as<double>(j, "k");
  if (j.contains("n")) {
    const json& n = j.at("n");
    if (n.is_number()) {
      c.n = Complex(n.get<double>(), 0.0);
    } else if (n.is_object()) {
      c.n = Complex(n.contains("re") ? get_as<double>(n, "re") : 0.0, n.contains("im") ? get_as<double>(n, "im") : 0.0);
    } else {
      throw ParameterError("config: 'n' must be a number or {re, im}");
    }
  }
  if (j.contains("method")) c.method = parse_method(get_as<std::string>(j, "method"));
  if (j.contains("n_divs")) c.n_divs = get_as<std::vector<int>>(j, "n_divs");
  if (j.contains("coarse")) c.coarse = get_as<int>(j, "coarse");
  if (j.contains("levels")) c.levels = get_as<int>(j, "levels");
  if (j.contains("cluster")) {
    const json& cl = j.at("cluster");
    if (cl.is_null()) {
      c.cluster.reset();
    } else {
      if (!cl.is_object()) throw ParameterError("config: 'cluster' must be {i, q}");
      ClusterSpec s;
      if (cl.contains("i")) s.start = get_as<int>(cl, "i");
      if (cl.contains("q")) s.size = get_as<int>(cl, "q");
      c.cluster = s;
    }
  }
  if (j.contains("wanted")) c.wanted = get_as<int>(j, "wanted");
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) throw ParameterError("config: 'tolerances' must be an object");
    if (t.contains("arnoldi")) c.arnoldi_tol = get_as<double>(t, "arnoldi");
    if (t.contains("inner")) c.inner_tol = get_as<double>(t, "inner");
    if (t.contains("drop")) c.drop_tol = get_as<double>(t, "drop");
  }
  if (j.contains("dense_cap")) c.dense_cap = get_as<std::size_t>(j, "dense_cap");
  if (j.contains("direct_max_dofs")) c.direct_max_dofs = get_as<Eigen::Index>(j, "direct_max_dofs");
  if (j.contains("output")) {
    const json& o = j.at("output");
    if (!o.is_object()) throw ParameterError("config: 'output' must be an object");
    if (o.contains("dir")) c.out_dir = get_as<std::string>(o, "dir");
    if (o.contains("prefix")) c.prefix = get_as<std::string>(o, "prefix");
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("timings")) c.timings = get_as<bool>(j, "timings");
  c.check();
  return c;
}

std::string format_number(double x) {
  if (!std::isfinite(x)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.11g", x);
  return buf;
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : "-"; }

std::string format_complex(Complex z) {
  std::string im = format_number(std::abs(z.imag()));
  return format_number(z.real()) + (std::signbit(z.imag()) && z.imag() != 0.0 ? "-" : "+") + im + "i";
}

std::optional<double> observed_order(double e1, double e2, double h1, double h2) {
  if (!(e1 > 1e-12) || !(e2 > 1e-12) || !(h1 > 0.0) || !(h2 > 0.0) || h1 == h2) return std::nullopt;
  const double r = std::log(e1 / e2) / std::log(h1 / h2);
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

std::string StudyReport::csv() const {
  std::ostringstream os;
  os << "domain,n,k,h,j,re_lambda,im_lambda,abs_error,order,seconds,method\n";
  const std::string dom = DomainSpec{config.domain}.name();
  for (const auto& r : rows) {
    os << dom << ',' << format_complex(config.n) << ',' << format_number(config.k) << ',' << format_number(r.h) << ','
       << r.j << ',' << format_number(r.lambda.real()) << ',' << format_number(r.lambda.imag()) << ','
       << format_optional(r.abs_error) << ',' << format_optional(r.order) << ','
       << (config.timings ? format_number(r.seconds) : std::string("-")) << ',' << r.method << '\n';
  }
  return os.str();
}

std::string StudyReport::summed_csv() const {
  std::ostringstream os;
  os << "h,n_div,dofs,multigrid_error_sum,direct_error_sum,max_difference,multigrid_seconds,direct_seconds,"
        "peak_pencil_dim\n";
  for (const auto& r : summed) {
    auto secs = [&](const std::optional<double>& s) {
      return config.timings ? format_optional(s) : std::string(s ? "x" : "-");
    };
    os << format_number(r.h) << ',' << r.n_div << ',' << r.dofs << ',' << format_optional(r.multigrid) << ','
       << format_optional(r.direct) << ',' << format_optional(r.max_difference) << ',' << secs(r.multigrid_seconds)
       << ',' << secs(r.direct_seconds) << ',' << r.peak_pencil_dim << '\n';
  }
  return os.str();
}

json StudyReport::summary() const {
  json j;
  j["config"] = config_to_json(config);
  j["notes"] = notes;
  j["failures"] = failures;
  json runs = json::array();
  for (const auto& r : rows) {
    json e;
    e["method"] = r.method;
    e["n_div"] = r.n_div;
    e["h"] = r.h;
    e["j"] = r.j;
    e["lambda"] = format_complex(r.lambda);
    e["re"] = r.lambda.real();
    e["im"] = r.lambda.imag();
    e["residual"] = r.residual;
    e["abs_error"] = r.abs_error ? json(*r.abs_error) : json(nullptr);
    e["order"] = r.order ? json(*r.order) : json(nullptr);
    if (config.timings) e["seconds"] = r.seconds;
    e["dofs"] = r.dofs;
    e["peak_dim"] = r.peak_dim;
    runs.push_back(e);
  }
  j["runs"] = runs;
  json summed_j = json::array();
  for (const auto& r : summed) {
    json e;
    e["n_div"] = r.n_div;
    e["h"] = r.h;
    e["dofs"] = r.dofs;
    e["multigrid_error_sum"] = r.multigrid ? json(*r.multigrid) : json("-");
    e["direct_error_sum"] = r.direct ? json(*r.direct) : json("-");
    e["max_difference"] = r.max_difference ? json(*r.max_difference) : json("-");
    if (config.timings) {
      e["multigrid_seconds"] = r.multigrid_seconds ? json(*r.multigrid_seconds) : json("-");
      e["direct_seconds"] = r.direct_seconds ? json(*r.direct_seconds) : json("-");
    }
    e["peak_pencil_dim"] = r.peak_pencil_dim;
    summed_j.push_back(e);
  }
  j["summed_errors"] = summed_j;
  return j;
}

StudyReport run_study(const ExperimentConfig& config) {
  config.check();
  StudyReport report;
  report.config = config;
  const DomainSpec domain{config.domain};
  const ProblemParams params = config.params();

  std::optional<ReferenceTable> table;
  if (config.k == 1.0) {
    try {
      table = emit_reference_table(config.domain, config.n);
      report.notes.push_back("reference values assume k = 1 (wavenumber not stated with the published values)");
    } catch (const ParameterError&) {
      report.notes.push_back("no reference values for this domain and n; errors are not reported");
    }
  } else {
    report.notes.push_back("reference values exist only for k = 1; errors are not reported");
  }

  std::vector<Group> groups;
  if (config.cluster) {
    Group g;
    for (int t = 0; t < config.cluster->size; ++t) g.labels.push_back(config.cluster->start + t);
    groups.push_back(g);
  } else if (table) {
    for (const auto& c : table->clusters) {
      Group g;
      for (int idx : c) {
        g.labels.push_back(idx);
        g.targets.push_back(table->at(idx).value);
        g.references.push_back(table->at(idx).value);
      }
      groups.push_back(g);
    }
  } else {
    groups.push_back(Group{{1}, {}, {}});
  }
  // With an explicit cluster the error is taken against the nearest published value.
  auto reference_for = [&](const Group& g, std::size_t t, Complex lambda) -> std::optional<Complex> {
    if (!g.references.empty()) return g.references[t];
    if (!table) return std::nullopt;
    std::optional<Complex> best;
    for (const auto& v : table->values)
      if (!best || std::abs(v.value - lambda) < std::abs(*best - lambda)) best = v.value;
    return best;
  };

  int wanted = config.wanted;
  for (const auto& g : groups) wanted = std::max(wanted, *std::max_element(g.labels.begin(), g.labels.end()) + 4);

  std::vector<int> direct_divs;
  if (config.method == Method::Direct) {
    direct_divs = config.n_divs;
  } else if (config.method == Method::Both) {
    for (int l = 0; l < config.levels; ++l) direct_divs.push_back(config.coarse << l);
  }

  // Direct solves, one job per mesh.
  struct DirectOutcome {
    int n_div = 0;
    std::vector<StudyRow> rows;
    std::optional<double> seconds;
    Eigen::Index dofs = 0;
    std::string failure;
    bool skipped = false;
  };
  std::vector<std::function<DirectOutcome()>> jobs;
  for (int nd : direct_divs) {
    jobs.push_back([&, nd]() {
      DirectOutcome out;
      out.n_div = nd;
      try {
        const Mesh mesh = build_initial_mesh(domain, nd);
        out.dofs = static_cast<Eigen::Index>(mesh.num_vertices());
        if (out.dofs > config.direct_max_dofs) {
          out.skipped = true;
          return out;
        }
        const auto t0 = Clock::now();
        const SteklovSystem sys = assemble_system(mesh, params);
        DirectOptions opts = config.direct_options();
        opts.n_wanted = wanted;
        const DirectSolution sol = direct_solve(sys, opts);
        out.seconds = seconds_since(t0);
        for (const auto& g : groups) {
          const auto idx = pick(sol.pairs, g);
          for (std::size_t t = 0; t < idx.size(); ++t) {
            const EigenPair& p = sol.pairs[idx[t]];
            StudyRow r;
            r.method = "direct";
            r.n_div = nd;
            r.h = sys.h;
            r.j = g.labels[t];
            r.lambda = p.lambda;
            if (auto ref = reference_for(g, t, p.lambda)) r.abs_error = std::abs(p.lambda - *ref);
            r.residual = residual(sys.a, sys.b, p);
            r.seconds = *out.seconds;
            r.dofs = sys.dim();
            out.rows.push_back(r);
          }
        }
      } catch (const Error& e) {
        out.failure = "direct n_div=" + std::to_string(nd) + ": " + e.what();
      }
      return out;
    });
  }
  const auto direct = run_limited<DirectOutcome>(std::move(jobs), thread_cap());
  std::map<int, const DirectOutcome*> direct_by_div;
  for (const auto& d : direct) {
    direct_by_div[d.n_div] = &d;
    if (!d.failure.empty()) report.failures.push_back(d.failure);
    if (d.skipped)
      report.notes.push_back("direct n_div=" + std::to_string(d.n_div) + " skipped: " + std::to_string(d.dofs) +
                             " unknowns exceed direct_max_dofs");
    report.rows.insert(report.rows.end(), d.rows.begin(), d.rows.end());
  }

  // Multigrid: all groups share one workspace.
  std::map<int, std::vector<StudyRow>> mg_rows;  // by n_div
  std::map<int, double> mg_seconds;
  std::map<int, Eigen::Index> mg_peak;
  if (config.method != Method::Direct && config.levels >= 1) {
    try {
      MultigridWorkspace ws(domain, params, config.coarse, config.levels);
      for (const auto& g : groups) {
        MultigridConfig mc;
        mc.domain = domain;
        mc.params = params;
        mc.n_div_coarse = config.coarse;
        mc.n_levels = config.levels;
        mc.cluster_size = static_cast<int>(g.labels.size());
        mc.cluster_start = g.labels.front();
        mc.cluster_targets = g.targets;
        mc.drop_tol = config.drop_tol;
        mc.dense_cap = config.dense_cap;
        try {
          const MultigridResult res = multigrid_solve(ws, mc);
          double cumulative = 0.0;
          for (const auto& rec : res.state.history) {
            cumulative += rec.seconds;
            const int nd = config.coarse << rec.level;
            mg_seconds[nd] += cumulative;
            Eigen::Index& peak = mg_peak[nd];
            peak = std::max(peak, rec.pencil_dim);
            for (std::size_t t = 0; t < rec.primal.size(); ++t) {
              StudyRow r;
              r.method = "multigrid";
              r.n_div = nd;
              r.h = rec.h;
              r.j = g.labels[t];
              r.lambda = rec.primal[t];
              if (auto ref = reference_for(g, t, rec.primal[t])) r.abs_error = std::abs(rec.primal[t] - *ref);
              r.residual = rec.primal_residuals[t];
              r.seconds = cumulative;
              r.dofs = rec.dofs;
              r.peak_dim = rec.pencil_dim;
              mg_rows[nd].push_back(r);
            }
          }
        } catch (const Error& e) {
          report.failures.push_back("multigrid cluster starting at " + std::to_string(g.labels.front()) + ": " +
                                    e.what());
        }
      }
      for (const auto& [nd, rows] : mg_rows) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    } catch (const Error& e) {
      report.failures.push_back(std::string("multigrid setup: ") + e.what());
    }
  }

  std::stable_sort(report.rows.begin(), report.rows.end(), [](const StudyRow& a, const StudyRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.h != b.h) return a.h > b.h;
    return a.j < b.j;
  });
  fill_orders(report.rows);

  if (config.method == Method::Both) {
    for (int nd : direct_divs) {
      SummedErrorRow s;
      s.n_div = nd;
      const auto mg = mg_rows.find(nd);
      const auto dit = direct_by_div.find(nd);
      if (mg != mg_rows.end() && !mg->second.empty()) {
        s.h = mg->second.front().h;
        s.dofs = mg->second.front().dofs;
        double sum = 0.0;
        bool all = true;
        for (const auto& r : mg->second) {
          if (r.abs_error)
            sum += *r.abs_error;
          else
            all = false;
        }
        if (all) s.multigrid = sum;
        s.multigrid_seconds = mg_seconds[nd];
        s.peak_pencil_dim = mg_peak[nd];
      }
      if (dit != direct_by_div.end() && !dit->second->skipped && dit->second->failure.empty()) {
        const auto& drows = dit->second->rows;
        if (!drows.empty()) {
          s.h = drows.front().h;
          s.dofs = drows.front().dofs;
        }
        double sum = 0.0;
        bool all = !drows.empty();
        for (const auto& r : drows) {
          if (r.abs_error)
            sum += *r.abs_error;
          else
            all = false;
        }
        if (all) s.direct = sum;
        s.direct_seconds = dit->second->seconds;
        if (mg != mg_rows.end()) {
          double diff = 0.0;
          for (const auto& r : mg->second)
            for (const auto& d : drows)
              if (d.j == r.j) diff = std::max(diff, std::abs(d.lambda - r.lambda));
          s.max_difference = diff;
        }
      }
      report.summed.push_back(s);
    }
  }
  return report;
}

std::vector<std::string> write_report(const StudyReport& report) {
  namespace fs = std::filesystem;
  const fs::path dir(report.config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::vector<std::string> written;
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << text;
    written.push_back(p.string());
  };
  write(dir / (report.config.prefix + ".csv"), report.csv());
  write(dir / (report.config.prefix + ".json"), report.summary().dump(2) + "\n");
  if (!report.summed.empty()) write(dir / (report.config.prefix + "_summed.csv"), report.summed_csv());
  return written;
}

}  // namespace steklov
