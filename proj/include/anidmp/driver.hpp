#pragma once

#include "anidmp/adapt.hpp"
#include "anidmp/cases.hpp"
#include "anidmp/dmp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace anidmp {

struct RunConfig {
  std::string case_name = "example1";
  MetricKind metric = MetricKind::dmp_adap;
  int target_elements = 2500;
  int loop_iterations = 10;
  /// Empty: nothing is written to disk.
  std::string output_dir;
  /// Recorded only; every component is deterministic.
  std::uint64_t seed = 0;
};

/// Throws Error when loop_iterations < 1 or target_elements < 4.
void validate_config(const RunConfig& config);

void to_json(nlohmann::json& j, const RunConfig& c);
/// Missing keys keep their defaults; unknown metric names throw Error.
void from_json(const nlohmann::json& j, RunConfig& c);

/// Everything the DMP audit says about one solved state.
struct DmpAudit {
  ConditionReport mesh_condition;
  MatrixVerdict matrix;
  SolutionBounds bounds;
  /// False when the source changes sign and the bounds say nothing.
  bool bounds_apply = true;

  /// mesh condition => M-matrix => bounds.
  [[nodiscard]] bool implication_holds() const;
};

struct SolvedState {
  Mesh mesh;
  SparseSystem system;
  std::vector<double> u;
  DmpAudit audit;
  std::optional<ErrorNorms> errors;
};

/// Assembles, solves and audits one case on one mesh.
SolvedState solve_on_mesh(const CaseSpec& spec, const Mesh& mesh);

struct IterationRecord {
  int iteration = 0;
  int elements = 0;
  int vertices = 0;
  double u_min = 0.0;
  double u_max = 0.0;
  DmpAudit audit;
  double sigma_h = 0.0;
  double alpha_h = 0.0;
  QualityReport quality;
  int adapt_sweeps = 0;
  bool stalled = false;
  int clamp_events = 0;
  std::optional<ErrorNorms> errors;
};

struct RunReport {
  RunConfig config;
  std::vector<IterationRecord> iterations;
  double wall_time_seconds = 0.0;
  /// Last mesh and solution.
  Mesh mesh;
  std::vector<double> u;

  [[nodiscard]] bool implication_holds() const;
};

/// Per-iteration JSON (wall time is left out so that reports are reproducible).
nlohmann::json report_json(const RunReport& report);

/// Initial solve on the builtin mesh, then loop_iterations rounds of
/// metric -> adapt -> solve. For unif the builtin mesh is used throughout.
/// With an output directory each round writes iter_NN/{mesh.txt,metric.txt,
/// solution.vtk} and report.json is rewritten after every round.
RunReport run_adapt_loop(const RunConfig& config);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ConvergenceResult {
  /// columns: target, elements, u_min, u_max, h1, l2 (NaN without exact solution)
  Table table;
  double h1_slope = 0.0;
  double l2_slope = 0.0;
  /// slope of -u_min; NaN if some u_min in the window is nonnegative
  double undershoot_slope = 0.0;
};

/// Least-squares slope of log(y) against log(x) over the points with index
/// >= n/2.
double upper_half_slope(const std::vector<double>& x, const std::vector<double>& y);

/// One run_adapt_loop per target; writes convergence.csv when the config has
/// an output directory (per-target runs go to N_<target>/).
ConvergenceResult run_convergence(const RunConfig& config, const std::vector<int>& targets);

std::string vtk_string(const Mesh& mesh, const std::vector<double>& u);
std::string csv_string(const Table& table);

/// Throw IoError when the file cannot be written.
void emit_vtk(const Mesh& mesh, const std::vector<double>& u, const std::string& path);
void emit_csv(const Table& table, const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace anidmp
