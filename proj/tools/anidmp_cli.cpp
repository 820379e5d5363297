// Command-line front end: solve, adapt-loop, check-dmp, convergence.

#include "anidmp/driver.hpp"
#include "anidmp/errors.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace anidmp;

constexpr int kExitError = 1;
constexpr int kExitDmp = 2;

struct Flags {
  std::string config_path;
  std::string case_name;
  std::string metric;
  int target = 0;
  int iters = 0;
  std::string out;
  std::string mesh_path;
  std::vector<int> targets;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig make_config(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = nlohmann::json::parse(read_file(f.config_path)).get<RunConfig>();
  if (!f.case_name.empty()) c.case_name = f.case_name;
  if (!f.metric.empty()) c.metric = parse_metric_kind(f.metric);
  if (f.target > 0) c.target_elements = f.target;
  if (f.iters > 0) c.loop_iterations = f.iters;
  if (!f.out.empty()) c.output_dir = f.out;
  validate_config(c);
  return c;
}

Mesh mesh_for(const Flags& f, const RunConfig& c, const CaseSpec& spec) {
  if (!f.mesh_path.empty()) return load_mesh(read_file(f.mesh_path));
  return builtin_domain(spec.domain, resolution_for_target(spec.domain, c.target_elements));
}

void print_state(const SolvedState& s) {
  const auto [lo, hi] = std::minmax_element(s.u.begin(), s.u.end());
  std::printf("elements %d  vertices %d  u_min %.6g  u_max %.6g\n", s.mesh.num_triangles(),
              s.mesh.num_vertices(), *lo, *hi);
  std::printf("mesh condition %s  M-matrix %s  bounds %s\n", s.audit.mesh_condition.passed ? "pass" : "fail",
              s.audit.matrix.all() ? "yes" : "no", s.audit.bounds.passed ? "pass" : "fail");
  if (s.errors) std::printf("H1 error %.6e  L2 error %.6e\n", s.errors->h1, s.errors->l2);
}

int cmd_solve(const Flags& f) {
  const RunConfig c = make_config(f);
  const CaseSpec spec = case_by_name(c.case_name);
  const SolvedState s = solve_on_mesh(spec, mesh_for(f, c, spec));
  print_state(s);
  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    emit_vtk(s.mesh, s.u, c.output_dir + "/solution.vtk");
    write_text(c.output_dir + "/mesh.txt", save_mesh(s.mesh));
  }
  return s.audit.implication_holds() ? 0 : kExitDmp;
}

int cmd_check(const Flags& f) {
  const RunConfig c = make_config(f);
  const CaseSpec spec = case_by_name(c.case_name);
  const SolvedState s = solve_on_mesh(spec, mesh_for(f, c, spec));
  nlohmann::json cond = s.audit.mesh_condition;
  cond["violating_count"] = s.audit.mesh_condition.violating_elements.size();
  cond.erase("violating_elements");
  const nlohmann::json out = {{"mesh_condition", cond},
                              {"matrix", s.audit.matrix},
                              {"bounds", s.audit.bounds},
                              {"implication_holds", s.audit.implication_holds()}};
  std::cout << out.dump(2) << "\n";
  return s.audit.implication_holds() ? 0 : kExitDmp;
}

int cmd_loop(const Flags& f) {
  const RunConfig c = make_config(f);
  const RunReport r = run_adapt_loop(c);
  for (const auto& it : r.iterations) {
    std::printf("iter %2d  N %6d  u_min %+.6e  u_max %.9f  cond %s  M %s", it.iteration, it.elements, it.u_min,
                it.u_max, it.audit.mesh_condition.passed ? "pass" : "fail", it.audit.matrix.all() ? "yes" : "no");
    if (it.errors) std::printf("  H1 %.4e  L2 %.4e", it.errors->h1, it.errors->l2);
    std::printf("  q_ali %.3f/%.3f q_eq %.2f\n", it.quality.q_ali_mean, it.quality.q_ali_max, it.quality.q_eq_max);
  }
  std::printf("wall time %.2f s\n", r.wall_time_seconds);
  return r.implication_holds() ? 0 : kExitDmp;
}

int cmd_convergence(const Flags& f) {
  const RunConfig c = make_config(f);
  const std::vector<int> targets = f.targets.empty() ? std::vector<int>{500, 1000, 2000, 4000, 8000} : f.targets;
  const ConvergenceResult r = run_convergence(c, targets);
  std::cout << csv_string(r.table);
  std::printf("slopes: h1 %.4f  l2 %.4f  -u_min %.4f\n", r.h1_slope, r.l2_slope, r.undershoot_slope);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic diffusion with DMP-preserving adaptive meshes"};
  app.require_subcommand(1);
  Flags f;
  const auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "JSON file with RunConfig fields");
    sub->add_option("--case", f.case_name, "example1, example1_variable, example2, example3, example3_interface");
    sub->add_option("--metric", f.metric, "unif, dmp, adap or dmp_adap");
    sub->add_option("--target-n", f.target, "target number of elements");
    sub->add_option("--iters", f.iters, "adaptation rounds");
    sub->add_option("--out", f.out, "output directory");
  };
  auto* solve_cmd = app.add_subcommand("solve", "solve once on a builtin or given mesh");
  add_common(solve_cmd);
  solve_cmd->add_option("--mesh", f.mesh_path, "mesh file");
  auto* loop_cmd = app.add_subcommand("adapt-loop", "run the adaptive loop");
  add_common(loop_cmd);
  auto* check_cmd = app.add_subcommand("check-dmp", "DMP audit of one solve");
  add_common(check_cmd);
  check_cmd->add_option("--mesh", f.mesh_path, "mesh file");
  auto* conv_cmd = app.add_subcommand("convergence", "errors and undershoot against N");
  add_common(conv_cmd);
  conv_cmd->add_option("--targets", f.targets, "list of target element counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }
  try {
    if (*solve_cmd) return cmd_solve(f);
    if (*loop_cmd) return cmd_loop(f);
    if (*check_cmd) return cmd_check(f);
    if (*conv_cmd) return cmd_convergence(f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
