#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <etrs/etrs.hpp>

namespace {

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw etrs::BadOption("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw etrs::BadOption("cannot open output file: " + path);
  out << text;
}

struct CommonOpts {
  std::string in_path = "-";
  std::string out_path = "-";
  double tol = 0.0;
  bool parallel = false;
  bool no_memo = false;
  long long max_vertex_enum = 0;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool solver_knobs) {
  cmd->add_option("-i,--in", o->in_path, "input instance file, - for stdin");
  cmd->add_option("-o,--out", o->out_path, "output file, - for stdout");
  cmd->add_option("--tol", o->tol, "feasibility tolerance override");
  if (solver_knobs) {
    cmd->add_flag("--parallel", o->parallel, "evaluate top-level facets concurrently");
    cmd->add_flag("--no-memo", o->no_memo, "disable shared-subproblem reuse");
    cmd->add_option("--max-vertex-enum", o->max_vertex_enum,
                    "vertex enumeration budget");
  }
}

etrs::SolverConfig make_config(const CommonOpts& o) {
  etrs::SolverConfig cfg;
  if (o.tol > 0.0) {
    cfg.feas_tol = o.tol;
    cfg.root_tol = o.tol * 1e-3;
  }
  cfg.parallel_facets = o.parallel;
  cfg.use_memo = !o.no_memo;
  if (o.max_vertex_enum > 0) cfg.max_vertex_enum = o.max_vertex_enum;
  return cfg;
}

std::string text_report(const etrs::SolutionReport& rep) {
  std::ostringstream ss;
  ss.precision(17);
  if (rep.status == etrs::SolveStatus::Infeasible) {
    ss << "status: infeasible\n";
    return ss.str();
  }
  ss << "status: optimal\n";
  ss << "value: " << rep.value << "\n";
  if (rep.x) {
    ss << "x:";
    for (int i = 0; i < rep.x->size(); ++i) ss << " " << (*rep.x)[i];
    ss << "\n";
  }
  if (rep.multiplier) ss << "multiplier: " << *rep.multiplier << "\n";
  ss << "active_set:";
  for (const int i : rep.active_set) ss << " " << i;
  ss << "\n";
  ss << "trs0_solves: " << rep.trs0_solves << "\n";
  if (rep.local_case_fired) ss << "local_case: true\n";
  return ss.str();
}

int run_solve(const CommonOpts& o, bool text) {
  const etrs::ProblemInstance inst = etrs::parse_instance(read_input(o.in_path));
  const etrs::SolverConfig cfg = make_config(o);
  const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
  write_output(o.out_path, text ? text_report(rep) : etrs::dump_report(rep));
  return rep.status == etrs::SolveStatus::Optimal ? 0 : 2;
}

int run_check(const CommonOpts& o) {
  const etrs::ProblemInstance inst = etrs::parse_instance(read_input(o.in_path));
  const etrs::ConditionReport cond = etrs::check_conditions(inst, make_config(o));
  nlohmann::json j;
  j["dc"] = cond.dc;
  j["newdc"] = cond.newdc;
  j["lambda_min"] = cond.lambda_min;
  j["null_dim"] = cond.null_dim;
  j["rank_a"] = cond.rank_a;
  write_output(o.out_path, j.dump(2) + "\n");
  return 0;
}

int run_gap(const CommonOpts& o) {
  const etrs::ProblemInstance inst = etrs::parse_instance(read_input(o.in_path));
  const etrs::SolverConfig cfg = make_config(o);
  const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
  const etrs::TightnessReport tight = etrs::certify_tightness(inst, cfg);
  nlohmann::json j;
  j["newdc"] = tight.cond.newdc;
  j["dc"] = tight.cond.dc;
  if (rep.status == etrs::SolveStatus::Optimal) {
    j["exact"] = rep.value;
    j["surrogate"] = tight.surrogate_value ? nlohmann::json(*tight.surrogate_value)
                                           : nlohmann::json();
    j["gap"] = tight.surrogate_value ? nlohmann::json(rep.value - *tight.surrogate_value)
                                     : nlohmann::json();
    j["lifted_value"] =
        tight.lifted_x ? nlohmann::json(etrs::objective_value(inst, *tight.lifted_x))
                       : nlohmann::json();
  } else {
    j["exact"] = nullptr;
    j["surrogate"] = nullptr;
    j["gap"] = nullptr;
    j["lifted_value"] = nullptr;
  }
  write_output(o.out_path, j.dump(2) + "\n");
  return rep.status == etrs::SolveStatus::Optimal ? 0 : 2;
}

int run_oracle(const CommonOpts& o, const std::string& method, int depth) {
  const etrs::ProblemInstance inst = etrs::parse_instance(read_input(o.in_path));
  const etrs::SolverConfig cfg = make_config(o);
  etrs::OracleResult res;
  if (method == "kkt")
    res = etrs::kkt_enumerate(inst, cfg);
  else if (method == "grid")
    res = etrs::grid_polish(inst, depth, cfg);
  else
    throw etrs::BadOption("unknown oracle method: " + method);
  nlohmann::json j;
  j["method"] = method;
  j["status"] = res.feasible ? "optimal" : "infeasible";
  j["value"] = res.feasible ? nlohmann::json(res.value) : nlohmann::json();
  j["x"] = res.feasible ? etrs::detail::vector_to_json(res.x) : nlohmann::json();
  j["candidates"] = res.candidates;
  write_output(o.out_path, j.dump(2) + "\n");
  return res.feasible ? 0 : 2;
}

int run_gen(const std::string& kind, int n, int m, std::uint64_t seed, double density,
            bool identity, const std::string& out_path) {
  etrs::ProblemInstance inst;
  if (kind == "random")
    inst = etrs::gen_random(n, m, seed, density);
  else if (kind == "qps")
    inst = etrs::gen_qps(n, seed, identity);
  else if (kind == "structured")
    inst = etrs::gen_structured(n, m, seed);
  else
    throw etrs::BadOption("unknown generator kind: " + kind);
  write_output(out_path, etrs::dump_instance(inst));
  return 0;
}

int run_bench(int n, int m, std::uint64_t seed, int count, const CommonOpts& o) {
  const etrs::SolverConfig cfg = make_config(o);
  double total_ms = 0.0, max_ms = 0.0;
  long long total_trs0 = 0;
  for (int i = 0; i < count; ++i) {
    const etrs::ProblemInstance inst = etrs::gen_random(n, m, seed + i);
    const auto t0 = std::chrono::steady_clock::now();
    const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    total_ms += ms;
    max_ms = std::max(max_ms, ms);
    total_trs0 += rep.trs0_solves;
  }
  nlohmann::json j;
  j["count"] = count;
  j["n"] = n;
  j["m"] = m;
  j["mean_ms"] = count > 0 ? total_ms / count : 0.0;
  j["max_ms"] = max_ms;
  j["total_trs0"] = total_trs0;
  write_output(o.out_path, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact solver for ball-constrained quadratics with linear cuts"};
  app.require_subcommand(1);

  CommonOpts solve_opts;
  bool solve_text = false;
  auto* solve_cmd = app.add_subcommand("solve", "solve an instance to global optimality");
  add_common(solve_cmd, &solve_opts, true);
  solve_cmd->add_flag("--text", solve_text, "human-readable output");

  CommonOpts check_opts;
  auto* check_cmd = app.add_subcommand("check", "report exactness conditions");
  add_common(check_cmd, &check_opts, false);

  CommonOpts gap_opts;
  auto* gap_cmd = app.add_subcommand("gap", "compare exact optimum with the convex surrogate");
  add_common(gap_cmd, &gap_opts, true);

  CommonOpts oracle_opts;
  std::string oracle_method = "kkt";
  int oracle_depth = 2;
  auto* oracle_cmd = app.add_subcommand("oracle", "reference solvers for cross-checking");
  add_common(oracle_cmd, &oracle_opts, false);
  oracle_cmd->add_option("--method", oracle_method, "kkt or grid");
  oracle_cmd->add_option("--depth", oracle_depth, "lattice depth for grid");

  std::string gen_kind = "random", gen_out = "-";
  int gen_n = 3, gen_m = 2;
  std::uint64_t gen_seed = 0;
  double gen_density = 1.0;
  bool gen_identity = false;
  auto* gen_cmd = app.add_subcommand("gen", "generate an instance");
  gen_cmd->add_option("kind", gen_kind, "random, qps, or structured");
  gen_cmd->add_option("-n,--n", gen_n, "dimension (qps: simplex size)");
  gen_cmd->add_option("-m,--m", gen_m, "number of linear constraints");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--density", gen_density, "off-diagonal density of Q");
  gen_cmd->add_flag("--identity", gen_identity, "qps: use the identity matrix");
  gen_cmd->add_option("-o,--out", gen_out, "output file, - for stdout");

  CommonOpts bench_opts;
  int bench_n = 6, bench_m = 3, bench_count = 10;
  std::uint64_t bench_seed = 1;
  auto* bench_cmd = app.add_subcommand("bench", "timing over generated instances");
  add_common(bench_cmd, &bench_opts, true);
  bench_cmd->add_option("-n,--n", bench_n, "dimension");
  bench_cmd->add_option("-m,--m", bench_m, "number of linear constraints");
  bench_cmd->add_option("--seed", bench_seed, "first seed");
  bench_cmd->add_option("--count", bench_count, "number of instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve_opts, solve_text);
    if (check_cmd->parsed()) return run_check(check_opts);
    if (gap_cmd->parsed()) return run_gap(gap_opts);
    if (oracle_cmd->parsed())
      return run_oracle(oracle_opts, oracle_method, oracle_depth);
    if (gen_cmd->parsed())
      return run_gen(gen_kind, gen_n, gen_m, gen_seed, gen_density, gen_identity, gen_out);
    if (bench_cmd->parsed())
      return run_bench(bench_n, bench_m, bench_seed, bench_count, bench_opts);
  } catch (const etrs::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const etrs::ZeroRowInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const etrs::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line > 0) std::cerr << " (line " << e.line << ", column " << e.column << ")";
    std::cerr << "\n";
    return 1;
  } catch (const etrs::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
