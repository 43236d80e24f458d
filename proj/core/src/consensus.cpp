#include "sadmm/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace sadmm {

double shrinkage(double a, double kappa) {
  return std::max(0.0, a - kappa) - std::max(0.0, -a - kappa);
}

Vector shrinkage(const Vector& a, double kappa) {
  return a.unaryExpr([kappa](double v) { return shrinkage(v, kappa); });
}

Vector update_x0(const SolverConfig& cfg, const std::vector<Vector>& x,
                 const std::vector<Vector>& lambda) {
  const auto n_workers = x.size();
  if (n_workers == 0 || lambda.size() != n_workers)
    throw ConfigError("update_x0: worker state mismatch");
  Vector acc = Vector::Zero(x[0].size());
  for (std::size_t i = 0; i < n_workers; ++i) acc += x[i] + lambda[i] / cfg.rho;
  const double n = static_cast<double>(n_workers);
  switch (cfg.reg) {
    case Reg::none:
      return acc / n;
    case Reg::l1:
      return shrinkage(Vector(acc / n), cfg.omega / (n * cfg.rho));
    case Reg::l2:
      return acc / (2.0 * cfg.omega / cfg.rho + n);
  }
  throw ConfigError("update_x0: unknown regularizer");
}

Vector dual_update(const Vector& lambda, const Vector& x, const Vector& x0, double rho) {
  return lambda + rho * (x - x0);
}

Residuals residuals(const std::vector<Vector>& x_new, const std::vector<Vector>& x_old,
                    const Vector& x0_new, double rho) {
  const auto n_workers = x_new.size();
  if (x_old.size() != n_workers || n_workers == 0)
    throw ConfigError("residuals: worker state mismatch");
  const Eigen::Index n = x0_new.size();
  Residuals res;
  res.r.resize(static_cast<Eigen::Index>(n_workers) * n);
  res.s = Vector::Zero(n);
  for (std::size_t i = 0; i < n_workers; ++i) {
    res.r.segment(static_cast<Eigen::Index>(i) * n, n) = x_new[i] - x0_new;
    res.s += x_new[i] - x_old[i];
  }
  res.s *= rho;
  return res;
}

Directive choose_solve_mode(Mode mode, int k, double prev_local_residual, double switch_radius,
                            double delta, double uniform_draw) {
  if (k == 0) return Directive::exact;  // nothing to linearize around yet
  switch (mode) {
    case Mode::admm:
      return Directive::exact;
    case Mode::sadmm:
      return prev_local_residual > switch_radius ? Directive::exact : Directive::sensitivity;
    case Mode::ssadmm:
      return uniform_draw <= std::pow(delta, k) ? Directive::exact : Directive::sensitivity;
    case Mode::ladmm:
      return Directive::ladmm;
  }
  throw ConfigError("choose_solve_mode: unknown mode");
}

Vector ladmm_step(const Vector& grad_xk, const Vector& x_k, const Vector& x0,
                  const Vector& lambda, double rho, double mu) {
  return (rho * x0 + mu * x_k - grad_xk - lambda) / (rho + mu);
}

double regularizer_value(Reg reg, double omega, const Vector& x0) {
  switch (reg) {
    case Reg::none:
      return 0.0;
    case Reg::l1:
      return omega * x0.lpNorm<1>();
    case Reg::l2:
      return omega * x0.squaredNorm();
  }
  throw ConfigError("regularizer_value: unknown regularizer");
}

double aug_lagrangian(const SolverConfig& cfg, const Vector& x0, const std::vector<Vector>& x,
                      const std::vector<Vector>& lambda, const std::vector<double>& local_loss) {
  double acc = regularizer_value(cfg.reg, cfg.omega, x0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vector d = x[i] - x0;
    acc += local_loss[i] + lambda[i].dot(d) + 0.5 * cfg.rho * d.squaredNorm();
  }
  return acc;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over seed advanced by the stream index
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector initial_iterate(std::uint64_t seed, int n) {
  std::mt19937_64 rng(mix_seed(seed, 0));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

namespace {

std::string summarize_modes(const std::vector<WorkerStats>& ws) {
  int exact = 0, sens = 0, lin = 0;
  for (const auto& w : ws) {
    switch (w.mode) {
      case SolveMode::exact_nlp:
        ++exact;
        break;
      case SolveMode::predictor:
      case SolveMode::predictor_corrected:
        ++sens;
        break;
      case SolveMode::ladmm:
        ++lin;
        break;
    }
  }
  const int n = static_cast<int>(ws.size());
  if (exact == n) return "exact";
  if (sens == n) return "sensitivity";
  if (lin == n) return "ladmm";
  return "mixed";
}

}  // namespace

RunTrace run(const SolverConfig& cfg, const Problem& problem, MasterEndpoints& workers) {
  validate(cfg);
  const int n_workers = cfg.n_workers;
  if (static_cast<int>(problem.shards.size()) != n_workers)
    throw ConfigError("run: " + std::to_string(problem.shards.size()) + " shards for " +
                      std::to_string(n_workers) + " workers");
  if (workers.size() != n_workers) throw ConfigError("run: endpoint count mismatch");

  const int n = param_count(problem.spec);
  const double primal_tol = stop_tol_primal_effective(cfg, n);
  const double dual_tol = stop_tol_dual_effective(cfg, n);

  RunTrace trace;
  trace.mode = cfg.mode;
  trace.n = n;
  trace.n_workers = n_workers;

  const Vector x_init = initial_iterate(cfg.rng_seed, n);

  SolveContext ctx;
  ctx.rho = cfg.rho;
  ctx.newton_tol = cfg.newton_tol;
  ctx.opt_tol = cfg.opt_tol;
  ctx.ladmm_mu = cfg.ladmm_mu;
  ctx.max_correctors = static_cast<std::uint32_t>(cfg.max_correctors);
  ctx.exact_solve_uses_stale_params = cfg.exact_solve_uses_stale_params;
  ctx.deterministic_timing = cfg.deterministic_timing;

  std::vector<AssignShardMsg> assignments(n_workers);
  for (int i = 0; i < n_workers; ++i) {
    assignments[i].worker_id = static_cast<std::uint32_t>(i);
    assignments[i].spec = problem.spec;
    assignments[i].ctx = ctx;
    assignments[i].x_init = x_init;
    assignments[i].shard = problem.shards[i];
  }
  workers.assign(assignments);

  Vector x0 = x_init;
  std::vector<Vector> x(n_workers, x_init);
  std::vector<Vector> lambda(n_workers, Vector::Zero(n));
  std::vector<double> prev_local_res(n_workers, 0.0);

  std::vector<std::mt19937_64> mode_rng;
  mode_rng.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i)
    mode_rng.emplace_back(mix_seed(cfg.rng_seed, 1000 + static_cast<std::uint64_t>(i)));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  if (cfg.keep_states) {
    std::vector<double> init_loss(n_workers);
    for (int i = 0; i < n_workers; ++i)
      init_loss[i] = loss(problem.spec, x_init, problem.shards[i]).value;
    trace.states.push_back({x0, x, lambda, init_loss});
  }

  bool converged = false;
  for (int k = 0; k < cfg.max_iter && !converged; ++k) {
    const Vector x0_new = update_x0(cfg, x, lambda);

    std::vector<RoundParamsMsg> params(n_workers);
    for (int i = 0; i < n_workers; ++i) {
      const double draw = cfg.mode == Mode::ssadmm ? u01(mode_rng[i]) : 0.0;
      params[i].k = static_cast<std::uint32_t>(k);
      params[i].directive = choose_solve_mode(cfg.mode, k, prev_local_res[i], cfg.switch_radius,
                                              cfg.ssadmm_delta, draw);
      params[i].x0 = x0_new;
      params[i].lambda = lambda[i];
    }
    workers.broadcast_round(params);
    const std::vector<RoundResultMsg> results = workers.gather_round(static_cast<std::uint32_t>(k));

    IterationRecord rec;
    rec.k = k;
    rec.workers.reserve(n_workers);
    std::vector<Vector> x_new(n_workers);
    std::vector<double> losses(n_workers);
    for (int i = 0; i < n_workers; ++i) {
      const RoundResultMsg& res = results[i];
      if (!res.ok) {
        workers.shutdown();
        throw SolverError("worker " + std::to_string(i) + " failed at iteration " +
                          std::to_string(k) + ": " + res.error);
      }
      if (res.x.size() != n) {
        workers.shutdown();
        throw ProtocolError("worker " + std::to_string(i) + ": result dimension mismatch");
      }
      x_new[i] = res.x;
      losses[i] = res.stats.local_loss;
      rec.workers.push_back(res.stats);
      rec.eps_max = std::max(rec.eps_max, res.eps_norm);
      if (res.stats.mode == SolveMode::exact_nlp) ++rec.nlp_solves;
      rec.linear_solves += res.stats.linear_solves;
      rec.max_worker_wall_time_s = std::max(rec.max_worker_wall_time_s, res.stats.wall_time_s);
    }

    for (int i = 0; i < n_workers; ++i)
      lambda[i] = dual_update(lambda[i], x_new[i], x0_new, cfg.rho);

    const Residuals resid = residuals(x_new, x, x0_new, cfg.rho);
    rec.r_norm = resid.r.norm();
    rec.s_norm = resid.s.norm();
    rec.aug_lagrangian = aug_lagrangian(cfg, x0_new, x_new, lambda, losses);
    rec.mode = summarize_modes(rec.workers);

    for (int i = 0; i < n_workers; ++i)
      prev_local_res[i] = (x_new[i] - x0_new).norm();

    x = std::move(x_new);
    x0 = x0_new;
    trace.records.push_back(std::move(rec));
    if (cfg.keep_states) trace.states.push_back({x0, x, lambda, losses});

    converged = trace.records.back().r_norm <= primal_tol &&
                trace.records.back().s_norm <= dual_tol;
  }

  workers.shutdown();
  trace.status = trace.records.empty()
                     ? RunStatus::not_started
                     : (converged ? RunStatus::converged : RunStatus::max_iterations);
  trace.x0_final = x0;
  trace.x_final = x;
  trace.lambda_final = lambda;
  return trace;
}

}  // namespace sadmm
