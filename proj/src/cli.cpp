#include "steklov/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "steklov/study.hpp"

namespace steklov {

using nlohmann::json;

namespace {

// Flag overrides; unset values leave the config file (or defaults) alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> domain;
  std::optional<double> n_re, n_im, k;
  std::optional<int> levels, coarse, q, i, wanted;
  std::optional<std::string> out, method;
  std::vector<int> n_divs;
  bool no_timings = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON experiment configuration");
  sub->add_option("--domain", o.domain, "square | lshape | slit");
  sub->add_option("--n-re", o.n_re, "real part of the refraction index");
  sub->add_option("--n-im", o.n_im, "imaginary part of the refraction index");
  sub->add_option("--k", o.k, "wavenumber");
  sub->add_option("--levels", o.levels, "number of hierarchy levels");
  sub->add_option("--coarse", o.coarse, "n_div of the coarsest mesh");
  sub->add_option("--q", o.q, "cluster size");
  sub->add_option("--i", o.i, "first cluster index");
  sub->add_option("--wanted", o.wanted, "eigenpairs computed by direct solves");
  sub->add_option("--n-div", o.n_divs, "mesh divisions for direct solves");
  sub->add_option("--out", o.out, "output file or directory");
  sub->add_flag("--no-timings", o.no_timings, "print '-' instead of wall times");
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open config file '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ParameterError("malformed config file '" + path + "': " + e.what());
  }
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : config_from_json(read_json_file(o.config_path));
  if (o.domain) c.domain = DomainSpec::parse(*o.domain).kind;
  if (o.n_re) c.n = Complex(*o.n_re, c.n.imag());
  if (o.n_im) c.n = Complex(c.n.real(), *o.n_im);
  if (o.k) c.k = *o.k;
  if (o.levels) c.levels = *o.levels;
  if (o.coarse) c.coarse = *o.coarse;
  if (o.i || o.q) {
    ClusterSpec s = c.cluster.value_or(ClusterSpec{});
    if (o.i) s.start = *o.i;
    if (o.q) s.size = *o.q;
    c.cluster = s;
  }
  if (o.wanted) c.wanted = *o.wanted;
  if (!o.n_divs.empty()) c.n_divs = o.n_divs;
  if (o.method) c.method = parse_method(*o.method);
  if (o.no_timings) c.timings = false;
  c.check();
  return c;
}

void emit(const json& j, const std::optional<std::string>& out) {
  if (out) {
    std::ofstream os(*out);
    if (!os) throw Error("cannot write '" + *out + "'");
    os << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

json pair_json(const EigenPair& p, double res) {
  return {{"re", p.lambda.real()}, {"im", p.lambda.imag()}, {"residual", res}, {"lambda", format_complex(p.lambda)}};
}

int run_mesh(const Overrides& o, int n_div, int refine, const std::optional<std::string>& mm_prefix) {
  const ExperimentConfig c = resolve(o);
  Mesh mesh = build_initial_mesh(DomainSpec{c.domain}, n_div);
  for (int r = 0; r < refine; ++r) mesh = refine_uniform(mesh).first;
  const MeshDiagnostics d = validate(mesh);
  json summary = {{"domain", DomainSpec{c.domain}.name()},
                  {"n_div", n_div},
                  {"refinements", refine},
                  {"vertices", mesh.num_vertices()},
                  {"elements", mesh.num_elements()},
                  {"boundary_edges", mesh.boundary_edges.size()},
                  {"h", mesh_diameter(mesh)},
                  {"area", d.area},
                  {"perimeter", d.perimeter},
                  {"euler_characteristic", d.euler_characteristic},
                  {"boundary_components", d.boundary_components},
                  {"valid", d.ok()},
                  {"violations", d.violations}};
  if (o.out) {
    std::ofstream os(*o.out);
    if (!os) throw Error("cannot write '" + *o.out + "'");
    os << mesh_to_json(mesh).dump() << '\n';
  }
  if (mm_prefix) {
    const auto write = [&](const std::string& name, const auto& m) {
      std::ofstream os(*mm_prefix + "_" + name + ".mtx");
      if (!os) throw Error("cannot write matrix files with prefix '" + *mm_prefix + "'");
      write_matrix_market(os, m);
    };
    write("S", assemble_stiffness(mesh));
    write("M", assemble_mass(mesh));
    write("B", assemble_boundary_mass(mesh));
    write("A", assemble_A(mesh, c.params()));
  }
  std::cout << summary.dump(2) << '\n';
  return d.ok() ? kExitOk : kExitSolverError;
}

int run_direct(const Overrides& o) {
  const ExperimentConfig c = resolve(o);
  const int n_div = c.n_divs.empty() ? 16 : c.n_divs.front();
  const Mesh mesh = build_initial_mesh(DomainSpec{c.domain}, n_div);
  const SteklovSystem sys = assemble_system(mesh, c.params());
  const DirectSolution sol = direct_solve(sys, c.direct_options());
  json eig = json::array();
  for (const auto& p : sol.pairs) eig.push_back(pair_json(p, residual(sys.a, sys.b, p)));
  json j = {{"h", sol.h}, {"k", c.k}, {"n", format_complex(c.n)}, {"n_div", n_div}, {"dofs", sol.stats.dofs},
            {"eigenvalues", eig}};
  if (c.timings)
    j["timings"] = {{"factor", sol.stats.factor_seconds}, {"eigen", sol.stats.eigen_seconds},
                    {"total", sol.stats.total_seconds}};
  emit(j, o.out);
  return kExitOk;
}

int run_multigrid(const Overrides& o) {
  const ExperimentConfig c = resolve(o);
  MultigridConfig mc;
  mc.domain = DomainSpec{c.domain};
  mc.params = c.params();
  mc.n_div_coarse = c.coarse;
  mc.n_levels = c.levels;
  const ClusterSpec cl = c.cluster.value_or(ClusterSpec{});
  mc.cluster_start = cl.start;
  mc.cluster_size = cl.size;
  mc.drop_tol = c.drop_tol;
  mc.dense_cap = c.dense_cap;
  const MultigridResult res = multigrid_solve(mc);
  json levels = json::array();
  for (const auto& rec : res.state.history) {
    json l = {{"level", rec.level}, {"h", rec.h}, {"dofs", rec.dofs}, {"pencil_dim", rec.pencil_dim},
              {"dropped_columns", rec.dropped_columns}};
    json prim = json::array();
    for (std::size_t t = 0; t < rec.primal.size(); ++t)
      prim.push_back({{"re", rec.primal[t].real()}, {"im", rec.primal[t].imag()},
                      {"residual", rec.primal_residuals[t]}, {"lambda", format_complex(rec.primal[t])}});
    l["eigenvalues"] = prim;
    l["a0"] = {{"min_diagonal", rec.a0.min_diagonal}, {"max_off_diagonal", rec.a0.max_off_diagonal},
               {"warnings", rec.a0.warnings}};
    if (c.timings) l["seconds"] = rec.seconds;
    levels.push_back(l);
  }
  json j = {{"k", c.k}, {"n", format_complex(c.n)}, {"coarse", c.coarse}, {"cluster", {{"i", cl.start}, {"q", cl.size}}},
            {"coarse_dim", res.coarse_dim}, {"peak_pencil_dim", res.peak_pencil_dim}, {"levels", levels}};
  if (c.timings) j["seconds"] = res.seconds;
  emit(j, o.out);
  return kExitOk;
}

int run_study_command(const Overrides& o, bool compare) {
  ExperimentConfig c = resolve(o);
  if (compare) c.method = Method::Both;
  if (o.out) c.out_dir = *o.out;
  const StudyReport report = run_study(c);
  for (const auto& path : write_report(report)) std::cerr << "wrote " << path << '\n';
  for (const auto& n : report.notes) std::cerr << "note: " << n << '\n';
  for (const auto& f : report.failures) std::cerr << "error: " << f << '\n';
  if (compare) std::cout << report.summed_csv();
  return report.failures.empty() ? kExitOk : kExitSolverError;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Steklov eigenvalue solver: direct and multigrid correction"};
  app.require_subcommand(1);
  Overrides mesh_o, direct_o, mg_o, study_o, compare_o;
  int n_div = 16;
  int refine = 0;
  std::optional<std::string> mm_prefix;

  CLI::App* mesh = app.add_subcommand("mesh", "generate, validate and export a mesh");
  add_common(mesh, mesh_o);
  mesh->add_option("--mesh-div", n_div, "n_div of the generated mesh");
  mesh->add_option("--refine", refine, "uniform refinements applied after generation");
  mesh->add_option("--matrix-market", mm_prefix, "write S, M, B, A as <prefix>_X.mtx");
  CLI::App* direct = app.add_subcommand("direct", "direct eigensolve on one mesh (first --n-div)");
  add_common(direct, direct_o);
  CLI::App* mg = app.add_subcommand("multigrid", "multigrid correction solve of one cluster");
  add_common(mg, mg_o);
  CLI::App* study = app.add_subcommand("study", "convergence study written as CSV and JSON");
  add_common(study, study_o);
  study->add_option("--method", study_o.method, "direct | multigrid | both");
  CLI::App* compare = app.add_subcommand("compare", "multigrid versus direct with summed errors");
  add_common(compare, compare_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (mesh->parsed()) return run_mesh(mesh_o, n_div, refine, mm_prefix);
    if (direct->parsed()) return run_direct(direct_o);
    if (mg->parsed()) return run_multigrid(mg_o);
    if (study->parsed()) return run_study_command(study_o, false);
    if (compare->parsed()) return run_study_command(compare_o, true);
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolverError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverError;
  }
  return kExitConfigError;
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("steklov_mg");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace steklov
