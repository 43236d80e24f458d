#include "sadmm/sharing.hpp"

#include <algorithm>

#include "sadmm/errors.hpp"

namespace sadmm {

SharingTrace run_sharing(const std::vector<ObjectivePtr>& objectives,
                         const SharingConfig& cfg) {
  if (objectives.empty()) throw ConfigError("run_sharing: no objectives");
  if (!(cfg.rho > 0.0)) throw ConfigError("run_sharing: rho must be positive");
  const auto n = objectives.front()->dim();
  for (const auto& obj : objectives)
    if (obj->dim() != n) throw ConfigError("run_sharing: objective dimensions differ");
  const int nw = static_cast<int>(objectives.size());

  std::vector<SubproblemEngine> engines;
  engines.reserve(nw);
  for (const auto& obj : objectives) {
    engines.emplace_back(obj, cfg.rho, cfg.newton);
    engines.back().set_initial(Vector::Zero(n));
  }

  SharingTrace trace;
  trace.x.assign(nw, Vector::Zero(n));
  trace.xbar = Vector::Zero(n);
  trace.lambda = Vector::Zero(n);

  for (int k = 0; k < cfg.max_iter; ++k) {
    SharingRecord rec;
    rec.k = k;
    double max_step = 0.0;
    for (int i = 0; i < nw; ++i) {
      // lambda^T x and the prox center x_i^k - xbar^k both fold into the
      // engine's parameter block; the constant offset does not move the solution
      const ParamBlock p{trace.x[i] - trace.xbar, trace.lambda};
      SolveReport rep;
      if (cfg.sensitivity && k > 0) {
        try {
          rep = engines[i].approximate_solve(p, cfg.opt_tol, cfg.max_correctors);
        } catch (const ToleranceUnreachable& e) {
          rep = engines[i].solve_exact(p, e.report.x);
          ++rec.exact_solves;
        }
      } else {
        rep = engines[i].solve_exact(p, trace.x[i]);
        ++rec.exact_solves;
      }
      max_step = std::max(max_step, (rep.x - trace.x[i]).norm());
      rec.eps_max = std::max(rec.eps_max, rep.eps_norm);
      trace.x[i] = rep.x;
    }

    trace.xbar.setZero();
    for (const auto& xi : trace.x) trace.xbar += xi;
    trace.xbar /= static_cast<double>(nw);
    trace.lambda += cfg.rho * trace.xbar;

    rec.feasibility_norm = static_cast<double>(nw) * trace.xbar.norm();
    rec.max_step = max_step;
    trace.records.push_back(rec);

    if (rec.feasibility_norm <= cfg.tol_feasibility && rec.max_step <= cfg.tol_step) {
      trace.status = RunStatus::converged;
      return trace;
    }
  }
  trace.status = trace.records.empty() ? RunStatus::not_started : RunStatus::max_iterations;
  return trace;
}

}  // namespace sadmm
