#include "anidmp/driver.hpp"

#include "anidmp/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace anidmp {

void validate_config(const RunConfig& config) {
  if (config.loop_iterations < 1) throw Error("loop_iterations must be at least 1");
  if (config.target_elements < 4) throw Error("target_elements must be at least 4");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"case", c.case_name},
       {"metric", std::string(to_string(c.metric))},
       {"target_elements", c.target_elements},
       {"loop_iterations", c.loop_iterations},
       {"output_dir", c.output_dir},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (j.contains("case")) c.case_name = j.at("case").get<std::string>();
  if (j.contains("metric")) c.metric = parse_metric_kind(j.at("metric").get<std::string>());
  if (j.contains("target_elements")) c.target_elements = j.at("target_elements").get<int>();
  if (j.contains("loop_iterations")) c.loop_iterations = j.at("loop_iterations").get<int>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
}

bool DmpAudit::implication_holds() const {
  if (!mesh_condition.passed) return true;
  return matrix.all() && (!bounds_apply || bounds.passed);
}

bool RunReport::implication_holds() const {
  return std::all_of(iterations.begin(), iterations.end(),
                     [](const IterationRecord& r) { return r.audit.implication_holds(); });
}

SolvedState solve_on_mesh(const CaseSpec& spec, const Mesh& mesh) {
  SolvedState s;
  s.mesh = mesh;
  const QuadratureRule rule = default_quadrature_2d();
  s.system = assemble(mesh, spec.problem, rule);
  s.u = solve(s.system);
  s.audit.mesh_condition = check_mesh_condition(mesh, spec.problem, rule);
  s.audit.matrix = check_stiffness(s.system);
  std::vector<double> g;
  for (int d = s.system.interior_count; d < s.system.size(); ++d) {
    g.push_back(s.u[static_cast<std::size_t>(s.system.vertex_of_dof[static_cast<std::size_t>(d)])]);
  }
  s.audit.bounds = check_solution_bounds(s.u, g, spec.source_sign);
  s.audit.bounds_apply = spec.source_sign != SourceSign::other;
  if (spec.has_exact) {
    s.errors = error_norms(mesh, s.u, spec.problem.exact, spec.problem.exact_gradient);
  }
  return s;
}

// ---------------------------------------------------------------------------
// reports

namespace {

nlohmann::json quality_json(const QualityReport& q) {
  return {{"q_ali_max", q.q_ali_max},
          {"q_ali_mean", q.q_ali_mean},
          {"q_eq_max", q.q_eq_max},
          {"element_count", q.element_count},
          {"length_histogram", q.length_histogram}};
}

nlohmann::json audit_json(const DmpAudit& a) {
  nlohmann::json cond = a.mesh_condition;
  // the full violation list is large and adds nothing to a summary
  cond["violating_count"] = a.mesh_condition.violating_elements.size();
  cond.erase("violating_elements");
  return {{"mesh_condition", cond},
          {"matrix", a.matrix},
          {"bounds", a.bounds},
          {"bounds_apply", a.bounds_apply},
          {"implication_holds", a.implication_holds()}};
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json report_json(const RunReport& report) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& r : report.iterations) {
    nlohmann::json j = {{"iteration", r.iteration},
                        {"elements", r.elements},
                        {"vertices", r.vertices},
                        {"u_min", r.u_min},
                        {"u_max", r.u_max},
                        {"dmp", audit_json(r.audit)},
                        {"sigma_h", r.sigma_h},
                        {"alpha_h", r.alpha_h},
                        {"quality", quality_json(r.quality)},
                        {"adapt_sweeps", r.adapt_sweeps},
                        {"stalled", r.stalled},
                        {"clamp_events", r.clamp_events}};
    if (r.errors) {
      j["errors"] = {{"h1", number_or_null(r.errors->h1)}, {"l2", number_or_null(r.errors->l2)}};
    }
    iterations.push_back(std::move(j));
  }
  return {{"config", report.config},
          {"iterations", iterations},
          {"implication_holds", report.implication_holds()}};
}

// ---------------------------------------------------------------------------
// the adaptive loop

namespace {

struct MetricBuild {
  VertexMetricField field;
  double sigma_h = 0.0;
  double alpha_h = 0.0;
};

MetricBuild build_metric(MetricKind kind, const CaseSpec& spec, const Mesh& mesh, const std::vector<double>& u) {
  const QuadratureRule rule = default_quadrature_2d();
  MetricBuild b;
  switch (kind) {
    case MetricKind::unif:
      b.field = metric_unif(mesh);
      b.sigma_h = sigma_h(mesh, b.field);
      break;
    case MetricKind::dmp:
      b.field = metric_dmp(spec.problem, mesh, rule);
      b.sigma_h = sigma_h(mesh, b.field);
      break;
    case MetricKind::dmp_adap: {
      auto [field, state] = metric_dmp_adap(spec.problem, mesh, u, rule);
      b.field = std::move(field);
      b.sigma_h = state.sigma_h;
      b.alpha_h = state.alpha_h;
      break;
    }
    case MetricKind::adap: {
      auto [field, state] = metric_adap(mesh, u);
      b.field = std::move(field);
      b.sigma_h = state.sigma_h;
      b.alpha_h = state.alpha_h;
      break;
    }
  }
  return b;
}

IterationRecord make_record(int iteration, const SolvedState& s) {
  IterationRecord r;
  r.iteration = iteration;
  r.elements = s.mesh.num_triangles();
  r.vertices = s.mesh.num_vertices();
  const auto [lo, hi] = std::minmax_element(s.u.begin(), s.u.end());
  r.u_min = *lo;
  r.u_max = *hi;
  r.audit = s.audit;
  r.errors = s.errors;
  return r;
}

std::string iteration_dir(const std::string& root, int iteration) {
  char name[32];
  std::snprintf(name, sizeof name, "iter_%02d", iteration);
  return (std::filesystem::path(root) / name).string();
}

void emit_iteration(const std::string& root, int iteration, const Mesh& mesh,
                    const VertexMetricField& field, const std::vector<double>& u) {
  const std::string dir = iteration_dir(root, iteration);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  write_text(dir + "/mesh.txt", save_mesh(mesh));
  write_text(dir + "/metric.txt", save_metric(field));
  emit_vtk(mesh, u, dir + "/solution.vtk");
}

void flush_report(const RunReport& report) {
  if (report.config.output_dir.empty()) return;
  write_text(report.config.output_dir + "/report.json", report_json(report).dump(2) + "\n");
}

}  // namespace

RunReport run_adapt_loop(const RunConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  const CaseSpec spec = case_by_name(config.case_name);
  RunReport report;
  report.config = config;
  if (!config.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create directory " + config.output_dir + ": " + ec.message());
  }

  const int resolution = resolution_for_target(spec.domain, config.target_elements);
  SolvedState state = solve_on_mesh(spec, builtin_domain(spec.domain, resolution));

  try {
    if (config.metric == MetricKind::unif) {
      // no adaptation: the same structured-mesh solve stands for every round
      const VertexMetricField field = metric_unif(state.mesh);
      for (int k = 1; k <= config.loop_iterations; ++k) {
        IterationRecord r = make_record(k, state);
        r.sigma_h = sigma_h(state.mesh, field);
        r.quality = quality_report(state.mesh, field);
        report.iterations.push_back(r);
        if (!config.output_dir.empty()) emit_iteration(config.output_dir, k, state.mesh, field, state.u);
        flush_report(report);
      }
    } else {
      AdaptOptions options;
      options.target_elements = config.target_elements;
      for (int k = 1; k <= config.loop_iterations; ++k) {
        const MetricBuild metric = build_metric(config.metric, spec, state.mesh, state.u);
        AdaptResult adapted = adapt_mesh(state.mesh, metric.field, options);
        state = solve_on_mesh(spec, adapted.mesh);
        IterationRecord r = make_record(k, state);
        r.sigma_h = metric.sigma_h;
        r.alpha_h = metric.alpha_h;
        r.quality = adapted.quality;
        r.adapt_sweeps = adapted.sweeps;
        r.stalled = adapted.stalled;
        r.clamp_events = adapted.field.clamp_events;
        report.iterations.push_back(r);
        if (!config.output_dir.empty()) emit_iteration(config.output_dir, k, state.mesh, adapted.field, state.u);
        flush_report(report);
      }
    }
  } catch (...) {
    flush_report(report);
    throw;
  }

  report.mesh = state.mesh;
  report.u = state.u;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output_dir.empty()) {
    const nlohmann::json timing = {{"wall_time_seconds", report.wall_time_seconds}};
    write_text(config.output_dir + "/timing.json", timing.dump(2) + "\n");
  }
  return report;
}

// ---------------------------------------------------------------------------
// convergence

double upper_half_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t i = n / 2; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / denom;
}

ConvergenceResult run_convergence(const RunConfig& config, const std::vector<int>& targets) {
  ConvergenceResult out;
  out.table.columns = {"target", "elements", "u_min", "u_max", "h1", "l2"};
  std::vector<double> n, h1, l2, undershoot;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int target : targets) {
    RunConfig c = config;
    c.target_elements = target;
    if (!config.output_dir.empty()) {
      c.output_dir = (std::filesystem::path(config.output_dir) / ("N_" + std::to_string(target))).string();
    }
    const RunReport r = run_adapt_loop(c);
    const IterationRecord& last = r.iterations.back();
    const double e_h1 = last.errors ? last.errors->h1 : nan;
    const double e_l2 = last.errors ? last.errors->l2 : nan;
    out.table.rows.push_back({static_cast<double>(target), static_cast<double>(last.elements), last.u_min,
                              last.u_max, e_h1, e_l2});
    n.push_back(last.elements);
    h1.push_back(e_h1);
    l2.push_back(e_l2);
    undershoot.push_back(-last.u_min);
  }
  out.h1_slope = upper_half_slope(n, h1);
  out.l2_slope = upper_half_slope(n, l2);
  out.undershoot_slope = upper_half_slope(n, undershoot);
  if (!config.output_dir.empty()) {
    emit_csv(out.table, config.output_dir + "/convergence.csv");
  }
  return out;
}

// ---------------------------------------------------------------------------
// files

namespace {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string vtk_string(const Mesh& mesh, const std::vector<double>& u) {
  if (u.size() != mesh.points.size()) throw Error("solution size does not match the mesh");
  std::string s = "# vtk DataFile Version 3.0\nanidmp solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  s += "POINTS " + std::to_string(mesh.num_vertices()) + " double\n";
  for (const auto& p : mesh.points) s += format_number(p.x()) + " " + format_number(p.y()) + " 0\n";
  s += "CELLS " + std::to_string(mesh.num_triangles()) + " " + std::to_string(4 * mesh.num_triangles()) + "\n";
  for (const auto& t : mesh.triangles) {
    s += "3 " + std::to_string(t.v[0]) + " " + std::to_string(t.v[1]) + " " + std::to_string(t.v[2]) + "\n";
  }
  s += "CELL_TYPES " + std::to_string(mesh.num_triangles()) + "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) s += "5\n";
  s += "POINT_DATA " + std::to_string(mesh.num_vertices()) + "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
  for (double x : u) s += format_number(x) + "\n";
  return s;
}

std::string csv_string(const Table& table) {
  std::string s;
  for (std::size_t i = 0; i < table.columns.size(); ++i) s += (i ? "," : "") + table.columns[i];
  s += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
    s += "\n";
  }
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void emit_vtk(const Mesh& mesh, const std::vector<double>& u, const std::string& path) {
  write_text(path, vtk_string(mesh, u));
}

void emit_csv(const Table& table, const std::string& path) { write_text(path, csv_string(table)); }

}  // namespace anidmp
