#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steklov/correction.hpp"
#include "steklov/references.hpp"

namespace steklov {

enum class Method { Direct, Multigrid, Both };

std::string method_name(Method m);
Method parse_method(const std::string& s);

struct ClusterSpec {
  int start = 1;
  int size = 1;
  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

/// One experiment. Defaults: square, k = 1, n = 4, direct method over
/// n_div 16..128, multigrid from n_div 16 over 4 levels, clusters taken from
/// the reference listing when available.
struct ExperimentConfig {
  DomainKind domain = DomainKind::Square;
  double k = 1.0;
  Complex n = Complex(4.0, 0.0);
  Method method = Method::Direct;
  std::vector<int> n_divs = {16, 32, 64, 128};
  int coarse = 16;
  int levels = 4;
  std::optional<ClusterSpec> cluster;  // unset: reference clusters (or {1, 1} without references)
  int wanted = 6;
  double arnoldi_tol = 1e-10;
  double inner_tol = 1e-12;
  double drop_tol = 1e-10;
  std::size_t dense_cap = 3000;
  Eigen::Index direct_max_dofs = 300000;  // compare mode skips larger direct solves
  std::string out_dir = ".";
  std::string prefix = "study";
  std::uint64_t seed = 20190101;
  bool timings = true;  // false prints "-" in the seconds column so output is reproducible

  ProblemParams params() const;
  DirectOptions direct_options() const;
  void check() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json config_to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys and wrong types throw ParameterError.
ExperimentConfig config_from_json(const nlohmann::json& j);

struct StudyRow {
  std::string method;
  int n_div = 0;
  double h = 0.0;
  int j = 0;
  Complex lambda = 0.0;
  std::optional<double> abs_error;
  std::optional<double> order;
  double residual = 0.0;
  double seconds = 0.0;
  Eigen::Index dofs = 0;
  Eigen::Index peak_dim = 0;
};

/// Per-mesh sum over the tracked eigenvalues of |λ - λ_ref|.
struct SummedErrorRow {
  int n_div = 0;
  double h = 0.0;
  std::optional<double> multigrid;
  std::optional<double> direct;
  std::optional<double> max_difference;  // max_j |λ^c_j - λ_j|
  std::optional<double> multigrid_seconds;
  std::optional<double> direct_seconds;
  Eigen::Index dofs = 0;
  Eigen::Index peak_pencil_dim = 0;
};

struct StudyReport {
  ExperimentConfig config;
  std::vector<StudyRow> rows;
  std::vector<SummedErrorRow> summed;
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  std::string csv() const;
  std::string summed_csv() const;
  nlohmann::json summary() const;
};

/// 11 significant digits, "-" for absent values.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);
std::string format_complex(Complex z);

/// log(e1/e2)/log(h1/h2), only when both errors exceed 1e-12.
std::optional<double> observed_order(double e1, double e2, double h1, double h2);

StudyReport run_study(const ExperimentConfig& config);

/// Writes <prefix>.csv, <prefix>.json and, when present, <prefix>_summed.csv.
std::vector<std::string> write_report(const StudyReport& report);

}  // namespace steklov
