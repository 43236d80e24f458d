#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sadmm/runner.hpp"
#include "sadmm/selfcheck.hpp"
#include "sadmm/theory.hpp"

namespace {

using namespace sadmm;

// flag overrides shared by the experiment commands; anything set here lands
// in the effective config, so the run_meta.json echo stays self-describing
struct Overrides {
  std::optional<std::string> mode;
  std::optional<double> rho;
  std::optional<std::string> reg;
  std::optional<double> omega;
  std::optional<double> opt_tol;
  std::optional<double> switch_radius;
  std::optional<double> delta;
  std::optional<double> mu;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter;
  std::optional<int> workers;
  std::optional<bool> deterministic_timing;
  std::optional<std::string> out_dir;
  std::optional<std::string> metrics;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--mode", ov.mode, "solver mode: admm|sadmm|ssadmm|ladmm");
  cmd->add_option("--rho", ov.rho, "penalty parameter");
  cmd->add_option("--reg", ov.reg, "regularizer: none|l1|l2");
  cmd->add_option("--omega", ov.omega, "regularizer weight");
  cmd->add_option("--D,--opt-tol", ov.opt_tol, "sensitivity residual bound D");
  cmd->add_option("--R,--switch-radius", ov.switch_radius, "exact-solve switch radius R");
  cmd->add_option("--delta", ov.delta, "stochastic exact-solve decay");
  cmd->add_option("--mu", ov.mu, "linearized-step proximal weight");
  cmd->add_option("--seed", ov.seed, "rng seed");
  cmd->add_option("--max-iter", ov.max_iter, "iteration cap");
  cmd->add_option("--workers", ov.workers, "worker count");
  cmd->add_flag("--deterministic-timing", ov.deterministic_timing,
                "record 0.0 wall times for bitwise-comparable traces");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--metrics", ov.metrics, "metrics file name");
}

void apply(const Overrides& ov, RunConfig& cfg) {
  if (ov.mode) cfg.solver.mode = mode_from_string(*ov.mode);
  if (ov.rho) cfg.solver.rho = *ov.rho;
  if (ov.reg) cfg.solver.reg = reg_from_string(*ov.reg);
  if (ov.omega) cfg.solver.omega = *ov.omega;
  if (ov.opt_tol) cfg.solver.opt_tol = *ov.opt_tol;
  if (ov.switch_radius) cfg.solver.switch_radius = *ov.switch_radius;
  if (ov.delta) cfg.solver.ssadmm_delta = *ov.delta;
  if (ov.mu) cfg.solver.ladmm_mu = *ov.mu;
  if (ov.seed) cfg.solver.rng_seed = *ov.seed;
  if (ov.max_iter) cfg.solver.max_iter = *ov.max_iter;
  if (ov.workers) cfg.solver.n_workers = *ov.workers;
  if (ov.deterministic_timing) cfg.solver.deterministic_timing = *ov.deterministic_timing;
  if (ov.out_dir) cfg.output.dir = *ov.out_dir;
  if (ov.metrics) cfg.output.metrics = *ov.metrics;
  validate(cfg.solver);
}

int total_nlp_solves(const RunTrace& trace) {
  int total = 0;
  for (const auto& rec : trace.records) total += rec.nlp_solves;
  return total;
}

void print_summary(const Experiment& exp, const RunTrace& trace, double wall_s,
                   const std::string& metrics_path) {
  std::ostringstream line;
  line << "status=" << to_string(trace.status);
  if (!trace.records.empty()) {
    const auto& fin = trace.records.back();
    line << " r=" << fin.r_norm << " s=" << fin.s_norm << " L=" << fin.aug_lagrangian;
    const EvalSummary ev = evaluate(exp, trace.x0_final);
    if (ev.regression)
      line << " mse=" << ev.fit.mse << " r2=" << ev.fit.r_squared;
    else
      line << " accuracy=" << ev.accuracy;
  }
  line << " nlp_solves=" << total_nlp_solves(trace) << " wall=" << wall_s << "s -> "
       << metrics_path;
  std::cout << line.str() << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string mode_metrics_name(const std::string& base, const std::string& mode) {
  const auto dot = base.rfind('.');
  if (dot == std::string::npos) return base + "_" + mode;
  return base.substr(0, dot) + "_" + mode + base.substr(dot);
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply(ov, cfg);
  if (cfg.transport.kind == TransportKind::tcp)
    throw ConfigError("run drives in-process workers; use serve-master for tcp");
  const Experiment exp = prepare_experiment(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const RunTrace trace = run_loopback(cfg.solver, exp.problem);
  const double wall = seconds_since(t0);
  const RunArtifacts art = write_run_outputs(exp, trace, cfg.output.metrics);
  print_summary(exp, trace, wall, art.metrics_path);
  return 0;
}

int cmd_compare(const std::string& config_path, std::string modes_csv, const Overrides& ov) {
  RunConfig base = load_run_config(config_path);
  apply(ov, base);
  std::vector<std::string> modes;
  std::stringstream ss(modes_csv);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) modes.push_back(tok);
  if (modes.empty()) throw ConfigError("compare: empty mode list");
  for (const std::string& m : modes) {
    RunConfig cfg = base;
    cfg.solver.mode = mode_from_string(m);
    const Experiment exp = prepare_experiment(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const RunTrace trace = run_loopback(cfg.solver, exp.problem);
    const double wall = seconds_since(t0);
    const RunArtifacts art =
        write_run_outputs(exp, trace, mode_metrics_name(cfg.output.metrics, m),
                          "run_meta_" + m + ".json");
    std::cout << m << ": ";
    print_summary(exp, trace, wall, art.metrics_path);
  }
  return 0;
}

int cmd_check(const std::string& suite) {
  std::vector<CheckResult> results;
  auto append = [&](std::vector<CheckResult> more) {
    for (auto& r : more) results.push_back(std::move(r));
  };
  if (suite == "gradcheck")
    append(run_gradcheck());
  else if (suite == "invariants")
    append(run_invariant_checks());
  else if (suite == "theory")
    append(run_theory_checks());
  else if (suite == "all") {
    append(run_gradcheck());
    append(run_invariant_checks());
    append(run_theory_checks());
  } else {
    throw ConfigError("unknown check suite '" + suite + "'");
  }
  int failures = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[ OK ] " : "[FAIL] ") << r.name << ": " << r.detail
              << std::endl;
    if (!r.passed) ++failures;
  }
  std::cout << results.size() - failures << "/" << results.size() << " checks passed"
            << std::endl;
  return failures == 0 ? 0 : 3;
}

int cmd_serve_master(const std::string& config_path, std::string bind_addr,
                     const Overrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply(ov, cfg);
  if (bind_addr.empty()) bind_addr = cfg.transport.listen;
  const Experiment exp = prepare_experiment(cfg);
  TcpListener listener(bind_addr);
  // workers parse this line to find an ephemeral port; flush before accepting
  std::cout << "listening on " << parse_hostport(bind_addr).first << ":" << listener.port()
            << std::endl;
  const auto t0 = std::chrono::steady_clock::now();
  const RunTrace trace = run_tcp(cfg.solver, exp.problem, listener);
  const double wall = seconds_since(t0);
  const RunArtifacts art = write_run_outputs(exp, trace, cfg.output.metrics);
  print_summary(exp, trace, wall, art.metrics_path);
  return 0;
}

int cmd_serve_worker(const std::string& master, int timeout_ms, const std::string& id) {
  auto channel = tcp_connect(master, timeout_ms);
  if (!id.empty()) std::cerr << "worker " << id << " connected to " << master << std::endl;
  run_worker(*channel);
  return 0;
}

int cmd_bench(const std::string& config_path, std::string modes_csv, const Overrides& ov) {
  RunConfig base = load_run_config(config_path);
  apply(ov, base);
  std::vector<std::string> modes;
  std::stringstream ss(modes_csv);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) modes.push_back(tok);
  std::printf("%-8s %10s %12s %14s %12s\n", "mode", "iters", "wall_s", "s_per_iter",
              "nlp_solves");
  for (const std::string& m : modes) {
    RunConfig cfg = base;
    cfg.solver.mode = mode_from_string(m);
    const Experiment exp = prepare_experiment(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const RunTrace trace = run_loopback(cfg.solver, exp.problem);
    const double wall = seconds_since(t0);
    const double per_iter = trace.records.empty()
                                ? 0.0
                                : wall / static_cast<double>(trace.records.size());
    std::printf("%-8s %10zu %12.4f %14.6f %12d\n", m.c_str(), trace.records.size(), wall,
                per_iter, total_nlp_solves(trace));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus model fitting over data shards with sensitivity-accelerated "
               "ADMM solvers"};
  app.require_subcommand(1);

  std::string config_path, modes_csv = "admm,sadmm,ssadmm,ladmm", suite, bind_addr;
  std::string master_addr, worker_id;
  int connect_timeout_ms = 10000;
  Overrides ov;

  CLI::App* run = app.add_subcommand("run", "run one experiment over in-process workers");
  run->add_option("--config", config_path, "run config JSON")->required();
  add_override_flags(run, ov);

  CLI::App* compare =
      app.add_subcommand("compare", "run several solver modes from one initial state");
  compare->add_option("--config", config_path, "run config JSON")->required();
  compare->add_option("--modes", modes_csv, "comma-separated mode list");
  add_override_flags(compare, ov);

  CLI::App* check = app.add_subcommand("check", "built-in verification suites");
  check->add_option("suite", suite, "gradcheck|invariants|theory|all")->required();

  CLI::App* master =
      app.add_subcommand("serve-master", "bind, accept tcp workers, drive the run");
  master->add_option("--config", config_path, "run config JSON")->required();
  master->add_option("--bind", bind_addr, "host:port (port 0 picks one, printed)");
  add_override_flags(master, ov);

  CLI::App* worker = app.add_subcommand("serve-worker", "serve one tcp worker");
  worker->add_option("--master", master_addr, "master host:port")
      ->envname("SADMM_MASTER")
      ->required();
  worker->add_option("--connect-timeout-ms", connect_timeout_ms, "connect retry window");
  worker->add_option("--id", worker_id, "log label; assignment comes from the master");

  CLI::App* bench = app.add_subcommand("bench", "per-mode wall-time summary");
  bench->add_option("--config", config_path, "run config JSON")->required();
  bench->add_option("--modes", modes_csv, "comma-separated mode list");
  add_override_flags(bench, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, ov);
    if (compare->parsed()) return cmd_compare(config_path, modes_csv, ov);
    if (check->parsed()) return cmd_check(suite);
    if (master->parsed()) return cmd_serve_master(config_path, bind_addr, ov);
    if (worker->parsed()) return cmd_serve_worker(master_addr, connect_timeout_ms, worker_id);
    if (bench->parsed()) return cmd_bench(config_path, modes_csv, ov);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return 2;
  } catch (const ProtocolError& e) {
    std::cerr << "transport error: " << e.what() << std::endl;
    return 4;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << std::endl;
    return 3;
  }
  return 1;
}
