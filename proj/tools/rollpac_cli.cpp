// Command-line front end: scenario runs with CSV/JSON archives, the oracle
// validation suite, and a small driver for user-defined BVP families.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rollpac/continuation.hpp"
#include "rollpac/scenarios.hpp"
#include "rollpac/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rollpac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitValidation = 4;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

// key = value lines with '#' comments
std::map<std::string, std::string> parse_config(const std::string& path, std::string& err) {
  std::map<std::string, std::string> kv;
  std::ifstream f(path);
  if (!f) {
    err = "cannot open config file: " + path;
    return kv;
  }
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      err = "config line " + std::to_string(lineno) + ": expected key = value";
      return kv;
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_trace_csv(const fs::path& path, const ContinuationTrace& trace) {
  std::ofstream f(path);
  f << "j,lambda,sigma,corrector_iters,bc_residual,halt_reason\n";
  for (const auto& te : trace)
    f << te.j << ',' << fmt17(te.lambda) << ',' << fmt17(te.sigma) << ',' << te.corrector_iters
      << ',' << fmt17(te.bc_residual) << ',' << te.halt_reason << '\n';
}

void write_solution_csv(const fs::path& path, const std::vector<PointOutputs>& rows) {
  std::ofstream f(path);
  if (rows.empty()) return;
  f << "s,t";
  for (int i = 0; i < rows[0].x.size(); ++i) f << ",x" << i + 1;
  for (int i = 0; i < rows[0].lam.size(); ++i) f << ",lam" << i + 1;
  for (int i = 0; i < rows[0].xi.size(); ++i) f << ",xi" << i + 1;
  for (int i = 0; i < rows[0].nu.size(); ++i) f << ",nu" << i + 1;
  for (int i = 0; i < rows[0].u.size(); ++i) f << ",u" << i + 1;
  f << ",N,f_s\n";
  for (const auto& r : rows) {
    f << fmt17(r.s) << ',' << fmt17(r.t);
    for (int i = 0; i < r.x.size(); ++i) f << ',' << fmt17(r.x(i));
    for (int i = 0; i < r.lam.size(); ++i) f << ',' << fmt17(r.lam(i));
    for (int i = 0; i < r.xi.size(); ++i) f << ',' << fmt17(r.xi(i));
    for (int i = 0; i < r.nu.size(); ++i) f << ',' << fmt17(r.nu(i));
    for (int i = 0; i < r.u.size(); ++i) f << ',' << fmt17(r.u(i));
    f << ',' << fmt17(r.N) << ',' << fmt17(r.fs) << '\n';
  }
}

int cmd_validate(double tol, double inject) {
  ValidateOptions opts;
  if (tol > 0) opts.rel_tol = tol;
  opts.inject_jacobian_error = inject;
  const ValidateReport rep = run_validation(opts);
  std::printf("%-55s %10s %10s %8s  %s\n", "check", "measured", "bound", "time", "status");
  for (const auto& c : rep.checks) {
    std::printf("%-55s %10.3e %10.3e %7.2fs  %s%s%s\n", c.name.c_str(), c.measured, c.bound,
                c.seconds, c.passed ? "pass" : "FAIL",
                c.detail.empty() ? "" : "  # ", c.detail.c_str());
  }
  std::printf("total: %.1fs, %s\n", rep.total_seconds, rep.all_passed() ? "all passed" : "FAILURES");
  return rep.all_passed() ? kExitOk : kExitValidation;
}

int cmd_run(const std::string& scenario, const std::string& config_path, const std::string& out_dir,
            double tol, int steps, const std::string& sigma_list, const std::string& seed_strategy,
            const std::string& cutoff) {
  ScenarioOptions opts;
  opts.name = scenario;
  if (tol > 0) opts.rel_tol = tol;
  if (steps > 0) opts.steps = steps;
  if (!sigma_list.empty()) opts.sigma_max = parse_list(sigma_list);
  std::string out = out_dir;

  if (!config_path.empty()) {
    std::string err;
    const auto kv = parse_config(config_path, err);
    if (!err.empty()) {
      std::fprintf(stderr, "config error: %s\n", err.c_str());
      return kExitConfig;
    }
    for (const auto& [key, value] : kv) {
      try {
        if (key == "scenario") opts.name = value;
        else if (key == "rel_tol") opts.rel_tol = std::stod(value);
        else if (key == "steps") opts.steps = std::stoi(value);
        else if (key == "sigma_max") opts.sigma_max = parse_list(value);
        else if (key == "d") opts.d = std::stoi(value);
        else if (key == "seed_strategy") {
          if (value == "linear") opts.seed = SeedStrategy::LinearInterp;
          else if (value == "ramp") opts.seed = SeedStrategy::WeightRampHomotopy;
          else throw std::invalid_argument("seed_strategy must be linear or ramp");
        } else if (key == "cutoff") {
          if (value == "sigmoid") opts.cutoff = CutoffKind::Sigmoid;
          else if (value == "relu4") opts.cutoff = CutoffKind::Relu4;
          else throw std::invalid_argument("cutoff must be sigmoid or relu4");
        } else if (key == "out_dir") {
          if (out.empty()) out = value;
        } else {
          throw std::invalid_argument("unknown key");
        }
      } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: key '%s': %s\n", key.c_str(), e.what());
        return kExitConfig;
      }
    }
  }
  if (opts.name.empty()) {
    std::fprintf(stderr, "config error: missing key 'scenario'\n");
    return kExitConfig;
  }
  if (!seed_strategy.empty()) {
    if (seed_strategy == "linear") opts.seed = SeedStrategy::LinearInterp;
    else if (seed_strategy == "ramp") opts.seed = SeedStrategy::WeightRampHomotopy;
    else {
      std::fprintf(stderr, "config error: --seed-strategy must be linear or ramp\n");
      return kExitConfig;
    }
  }
  if (!cutoff.empty()) {
    if (cutoff == "sigmoid") opts.cutoff = CutoffKind::Sigmoid;
    else if (cutoff == "relu4") opts.cutoff = CutoffKind::Relu4;
    else {
      std::fprintf(stderr, "config error: --cutoff must be sigmoid or relu4\n");
      return kExitConfig;
    }
  }
  if (out.empty()) out = "out-" + opts.name;

  ScenarioRun run;
  try {
    run = run_scenario(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitConfig;
  }

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::fprintf(stderr, "config error: cannot create output directory %s\n", out.c_str());
    return kExitConfig;
  }

  json summary;
  summary["scenario"] = run.name;
  summary["status"] = run.ok() ? "ok" : "failed";
  json sols = json::array();
  for (size_t i = 0; i < run.solutions.size(); ++i) {
    const auto& m = run.metrics[i];
    std::vector<PointOutputs> rows;
    double span = 0.0;
    if (run.is_ball) {
      const BallScenario& sc = run.ball_rounds[static_cast<size_t>(m.round - 1)];
      rows = ball_outputs(sc, run.solutions[i]);
      span = sc.b - sc.a;
    } else {
      rows = disk_outputs(run.disk, run.solutions[i]);
      span = run.disk.b - run.disk.a;
    }
    char name[64];
    std::snprintf(name, sizeof(name), "solution_%03zu.csv", i);
    write_solution_csv(fs::path(out) / name, rows);

    json js;
    js["index"] = m.index;
    js["round"] = m.round;
    js["mu"] = m.mu;
    js["J"] = m.J;
    js["J_plus_C_span"] = m.J + 50.0 * span;  // comparable to runs that add C=50 to L
    if (run.is_ball) js["clearance"] = m.clearance;
    else js["tracking_error"] = m.tracking_error;
    js["ups_inf"] = m.ups_inf;
    js["ham_drift"] = m.ham_drift;
    js["min_N"] = m.feasibility.min_N;
    js["min_mu_s"] = m.feasibility.min_mu_s;
    js["detached"] = m.feasibility.detach_flag;
    js["mesh_points"] = run.solutions[i].y.size();
    sols.push_back(js);

    std::printf("sol %2zu r%d mu=%.6f J=%.4f %s=%.6f min_N=%.3f min_mu_s=%.4f\n", i, m.round, m.mu,
                m.J, run.is_ball ? "clearance" : "tracking_error",
                run.is_ball ? m.clearance : m.tracking_error, m.feasibility.min_N,
                m.feasibility.min_mu_s);
  }
  summary["solutions"] = sols;
  json halts = json::array();
  for (const auto& te : run.trace) halts.push_back(te.halt_reason);
  summary["halt_reasons"] = halts;
  write_trace_csv(fs::path(out) / "trace.csv", run.trace);
  std::ofstream(fs::path(out) / "summary.json") << summary.dump(2) << "\n";

  if (!run.ok()) {
    std::fprintf(stderr, "solver failure: see %s/trace.csv\n", out.c_str());
    return kExitSolver;
  }
  return kExitOk;
}

// Small expression-free family zoo for solve-bvp.
struct FamilySpec {
  std::string family = "bratu";
  std::string algorithm = "sweep";  // pac | sweep
  double lambda0 = 0.0;
  int steps = 3;
  std::vector<double> sigma_max = {50.0, 4.0, 4.0};
  double rel_tol = 1e-8;
  int d = 2;
  std::vector<double> poly_c, poly_d;  // y'' = sum c_k y^k + lam sum d_k y^k
  double ya = 0.0, yb = 0.0;
};

TpbvpProblem family_problem(const FamilySpec& spec, std::string& err) {
  TpbvpProblem p;
  if (spec.family == "bratu") {
    p.dim = 2;
    p.F = [](double, const Eigen::VectorXd& y, double lam) {
      return Eigen::Vector2d(y(1), -lam * std::exp(y(0))).eval();
    };
    p.F_y = [](double, const Eigen::VectorXd& y, double lam) {
      Eigen::Matrix2d J;
      J << 0, 1, -lam * std::exp(y(0)), 0;
      return Eigen::MatrixXd(J);
    };
    p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double) {
      return Eigen::Vector2d(ya(0), yb(0)).eval();
    };
  } else if (spec.family == "linear-exp") {
    p.dim = 1;
    p.F = [](double, const Eigen::VectorXd& y, double lam) { return (lam * y).eval(); };
    p.F_y = [](double, const Eigen::VectorXd&, double lam) {
      return (lam * Eigen::MatrixXd::Ones(1, 1)).eval();
    };
    p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
      return (ya.array() - 1.0).matrix().eval();
    };
  } else if (spec.family == "poly") {
    const std::vector<double> c = spec.poly_c, dcoef = spec.poly_d;
    const double ya = spec.ya, yb = spec.yb;
    p.dim = 2;
    p.F = [c, dcoef](double, const Eigen::VectorXd& y, double lam) {
      double rhs = 0.0, yk = 1.0;
      for (size_t k = 0; k < std::max(c.size(), dcoef.size()); ++k) {
        const double ck = k < c.size() ? c[k] : 0.0;
        const double dk = k < dcoef.size() ? dcoef[k] : 0.0;
        rhs += (ck + lam * dk) * yk;
        yk *= y(0);
      }
      return Eigen::Vector2d(y(1), rhs).eval();
    };
    p.G = [ya, yb](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double) {
      return Eigen::Vector2d(a(0) - ya, b(0) - yb).eval();
    };
  } else {
    err = "unknown family name: " + spec.family;
  }
  return p;
}

int cmd_solve_bvp(const std::string& spec_path, const std::string& out_dir) {
  FamilySpec spec;
  std::string err;
  const auto kv = parse_config(spec_path, err);
  if (!err.empty()) {
    std::fprintf(stderr, "config error: %s\n", err.c_str());
    return kExitConfig;
  }
  try {
    for (const auto& [key, value] : kv) {
      if (key == "family") spec.family = value;
      else if (key == "algorithm") spec.algorithm = value;
      else if (key == "lambda0") spec.lambda0 = std::stod(value);
      else if (key == "steps") spec.steps = std::stoi(value);
      else if (key == "sigma_max") spec.sigma_max = parse_list(value);
      else if (key == "rel_tol") spec.rel_tol = std::stod(value);
      else if (key == "d") spec.d = std::stoi(value);
      else if (key == "c") spec.poly_c = parse_list(value);
      else if (key == "dcoef") spec.poly_d = parse_list(value);
      else if (key == "ya") spec.ya = std::stod(value);
      else if (key == "yb") spec.yb = std::stod(value);
      else throw std::invalid_argument("unknown key " + key);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  TpbvpProblem prob = family_problem(spec, err);
  if (!err.empty()) {
    std::fprintf(stderr, "config error: %s\n", err.c_str());
    return kExitConfig;
  }
  prob.lam = spec.lambda0;
  SolverSettings st;
  st.rel_tol = spec.rel_tol;
  const MeshFunction guess =
      MeshFunction::zero(Eigen::VectorXd::LinSpaced(11, 0.0, 1.0), prob.dim);
  const BvpResult seed = solve_tpbvp(prob, guess, st);
  if (!seed.ok()) {
    std::fprintf(stderr, "solver failure: initial solve %s\n", to_string(seed.status));
    return kExitSolver;
  }
  const CurvePoint sol1{seed.solution, spec.lambda0};

  ContinuationResult res;
  if (spec.algorithm == "pac") {
    PacSettings ps;
    ps.J = spec.steps;
    ps.solver = st;
    ps.sigma_init = 0.25;
    ps.sigma_max = spec.sigma_max.empty() ? 1.0 : spec.sigma_max[0];
    ps.d = spec.d >= 0 ? 1 : -1;
    res = pac_bvp(prob, sol1, ps);
  } else if (spec.algorithm == "sweep") {
    SweepPacSettings ps;
    ps.J = spec.steps;
    ps.sigma_max = spec.sigma_max;
    while (static_cast<int>(ps.sigma_max.size()) < ps.J)
      ps.sigma_max.push_back(ps.sigma_max.empty() ? 1.0 : ps.sigma_max.back());
    ps.d = spec.d;
    ps.solver = st;
    res = pac_s3_bvp(prob, sol1, ps);
  } else {
    std::fprintf(stderr, "config error: algorithm must be pac or sweep\n");
    return kExitConfig;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "config error: cannot create output directory %s\n", out_dir.c_str());
    return kExitConfig;
  }
  write_trace_csv(fs::path(out_dir) / "trace.csv", res.trace);
  for (size_t i = 0; i < res.solutions.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "solution_%03zu.csv", i);
    std::ofstream f(fs::path(out_dir) / name);
    f << "s";
    for (int k = 0; k < res.solutions[i].y.dim(); ++k) f << ",y" << k + 1;
    f << ",lambda\n";
    const auto& mesh = res.solutions[i].y.mesh();
    for (Eigen::Index r = 0; r < mesh.size(); ++r) {
      f << fmt17(mesh(r));
      for (int k = 0; k < res.solutions[i].y.dim(); ++k)
        f << ',' << fmt17(res.solutions[i].y.values()(r, k));
      f << ',' << fmt17(res.solutions[i].lam) << '\n';
    }
    std::printf("sol %2zu lambda=%.8f\n", i, res.solutions[i].lam);
  }
  return res.ok() ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"indirect optimal control of rolling bodies via predictor-corrector continuation"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "run the oracle validation suite");
  double vtol = -1.0, inject = 0.0;
  validate->add_option("--tol", vtol, "solver tolerance override");
  validate->add_option("--inject-jacobian-error", inject,
                       "test hook: bias one Jacobian entry so the checks must fail");

  auto* run = app.add_subcommand("run", "run a scenario and write its archive");
  std::string scenario, config, out, sigma_list, seed_strategy, cutoff;
  double rtol = -1.0;
  int steps = -1;
  run->add_option("scenario", scenario,
                  "disk-tracking | disk-turning-points | ball-sigmoid | ball-relu");
  run->add_option("--config", config, "key = value configuration file");
  run->add_option("--out", out, "output directory");
  run->add_option("--tol", rtol, "relative error tolerance");
  run->add_option("--steps", steps, "number of continuation steps");
  run->add_option("--sigma-max", sigma_list, "comma-separated steplength limits");
  run->add_option("--seed-strategy", seed_strategy, "linear | ramp");
  run->add_option("--cutoff", cutoff, "sigmoid | relu4 (ball scenarios)");

  auto* solve = app.add_subcommand("solve-bvp", "trace a user-defined BVP family");
  std::string spec_path, solve_out = "out-bvp";
  solve->add_option("spec", spec_path, "family spec file")->required();
  solve->add_option("--out", solve_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(vtol, inject);
  if (run->parsed()) {
    if (scenario.empty() && config.empty()) {
      std::fprintf(stderr, "config error: provide a scenario name or --config\n");
      return kExitConfig;
    }
    return cmd_run(scenario, config, out, rtol, steps, sigma_list, seed_strategy, cutoff);
  }
  if (solve->parsed()) return cmd_solve_bvp(spec_path, solve_out);
  return kExitConfig;
}
