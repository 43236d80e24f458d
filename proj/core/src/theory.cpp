#include "sadmm/theory.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sadmm/model.hpp"

namespace sadmm {

namespace {

// Pooled quadratic data: J(x) = 0.5 x^T H x + g^T x + c over all shards.
struct Pooled {
  Matrix h;
  Vector g;
  double c = 0.0;
};

Pooled pool_quadratic(const Problem& problem) {
  const int n = param_count(problem.spec);
  Pooled p;
  p.h = Matrix::Zero(n, n);
  p.g = Vector::Zero(n);
  const Vector origin = Vector::Zero(n);
  for (const auto& shard : problem.shards) {
    p.h += hessian(problem.spec, origin, shard).mat();
    p.g += grad(problem.spec, origin, shard);
    p.c += loss(problem.spec, origin, shard).value;
  }
  return p;
}

double pooled_minimum(const Problem& problem, const SolverConfig& cfg) {
  Pooled p = pool_quadratic(problem);
  // l1 keeps the smooth part only; the penalty is nonnegative, so the smooth
  // minimum stays a valid lower bound for the full objective
  if (cfg.reg == Reg::l2)
    p.h += 2.0 * cfg.omega * Matrix::Identity(p.h.rows(), p.h.cols());
  SolveInfo info;
  const Vector xhat = solve_sym(SymMatrix(SymMatrix::symmetrize(p.h)), -p.g, &info);
  const double value = 0.5 * xhat.dot(p.h * xhat) + p.g.dot(xhat) + p.c;
  // back off by the solve slack so the reported number stays a lower bound;
  // squared losses keep the true minimum at or above zero
  return std::max(0.0, value - 1e-9 * (1.0 + std::abs(value)));
}

}  // namespace

double penalty_threshold(double lipschitz, double hessian_min_eig) {
  const double l2 = lipschitz * lipschitz;
  return 0.5 * (-hessian_min_eig +
                std::sqrt(hessian_min_eig * hessian_min_eig + 32.0 * l2));
}

AnalysisEstimates estimate_analysis(const Problem& problem, const SolverConfig& cfg) {
  AnalysisEstimates est;
  est.rho = cfg.rho;
  const int n = param_count(problem.spec);
  const bool quadratic = problem.spec.kind == ModelKind::linear_features;

  std::mt19937_64 rng(mix_seed(cfg.rng_seed, 2000));
  std::uniform_real_distribution<double> box(-1.0, 1.0);

  for (const auto& shard : problem.shards) {
    double lip;
    double min_eig;
    if (quadratic) {
      const SymMatrix h = hessian(problem.spec, Vector::Zero(n), shard);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(h.mat());
      min_eig = eig.eigenvalues().minCoeff();
      lip = eig.eigenvalues().maxCoeff();
    } else {
      // sampled secant estimate of the gradient Lipschitz constant
      lip = 0.0;
      for (int trial = 0; trial < 64; ++trial) {
        Vector a(n), b(n);
        for (int j = 0; j < n; ++j) {
          a[j] = box(rng);
          b[j] = box(rng);
        }
        const double gap = (a - b).norm();
        if (gap < 1e-12) continue;
        const double slope =
            (grad(problem.spec, a, shard) - grad(problem.spec, b, shard)).norm() / gap;
        lip = std::max(lip, slope);
      }
      const SymMatrix h = hessian(problem.spec, Vector::Zero(n), shard);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(h.mat());
      min_eig = eig.eigenvalues().minCoeff();
      lip = std::max(lip, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
    est.lipschitz.push_back(lip);
    est.hessian_min_eig.push_back(min_eig);
    est.gamma.push_back(min_eig + cfg.rho);
  }

  est.rho_m = cfg.rho;
  for (double g : est.gamma) est.rho_m = std::min(est.rho_m, g);
  est.gamma_x0 = static_cast<double>(problem.shards.size()) * cfg.rho +
                 (cfg.reg == Reg::l2 ? 2.0 * cfg.omega : 0.0);
  est.exact = quadratic;
  est.loss_lower_bound = quadratic ? pooled_minimum(problem, cfg) : 0.0;

  est.penalty_admissible = true;
  for (std::size_t i = 0; i < est.gamma.size(); ++i) {
    if (cfg.rho * est.gamma[i] < 8.0 * est.lipschitz[i] * est.lipschitz[i])
      est.penalty_admissible = false;
  }
  return est;
}

int TheoryReport::total_violations() const {
  return dual_step.violations + descent.violations + lagrangian_floor.violations +
         stationarity.violations + consensus_gap.violations;
}

namespace {

// records one "lhs <= rhs" evaluation with relative slack on the bound
void tally(TheoryCheck& check, double lhs, double rhs) {
  const double slack = 1e-9 * (1.0 + std::abs(rhs));
  const double gap = lhs - rhs;
  if (check.evaluated == 0 || gap > check.worst_gap) check.worst_gap = gap;
  ++check.evaluated;
  if (gap > slack) ++check.violations;
}

bool all_sensitivity(const IterationRecord& rec) {
  for (const auto& w : rec.workers) {
    const bool sens =
        w.mode == SolveMode::predictor || w.mode == SolveMode::predictor_corrected;
    if (!sens || w.fell_back) return false;
  }
  return !rec.workers.empty();
}

}  // namespace

TheoryReport check_convergence_theory(const Problem& problem, const RunTrace& trace,
                                      const AnalysisEstimates& estimates,
                                      const SolverConfig& cfg) {
  if (problem.spec.kind != ModelKind::linear_features)
    throw ConfigError(
        "check_convergence_theory: constants are certifiable only for "
        "linear-feature models");
  if (trace.states.size() != trace.records.size() + 1)
    throw ConfigError("check_convergence_theory: trace was run without keep_states");
  const int n_workers = trace.n_workers;
  if (static_cast<int>(problem.shards.size()) != n_workers ||
      static_cast<int>(estimates.lipschitz.size()) != n_workers)
    throw ConfigError("check_convergence_theory: worker counts disagree");

  TheoryReport rep;
  rep.estimates = estimates;
  rep.d_used = trace.mode == Mode::admm ? cfg.newton_tol : cfg.opt_tol;
  rep.dual_step.name = "dual_step";
  rep.descent.name = "descent";
  rep.descent_squared.name = "descent_squared";
  rep.lagrangian_floor.name = "lagrangian_floor";
  rep.stationarity.name = "stationarity";
  rep.consensus_gap.name = "consensus_gap";

  const double d = rep.d_used;
  const double rho = cfg.rho;
  const int last = static_cast<int>(trace.states.size()) - 1;

  std::vector<double> lagr(trace.states.size());
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    const auto& st = trace.states[t];
    lagr[t] = aug_lagrangian(cfg, st.x0, st.x, st.lambda, st.local_loss);
  }

  // transitions j -> j+1 with both endpoints post-solve, hence j >= 1
  std::vector<double> steps;
  for (int j = 1; j + 1 <= last; ++j) {
    const auto& prev = trace.states[j];
    const auto& next = trace.states[j + 1];
    double delta_sum = 0.0;
    double step_sup = (next.x0 - prev.x0).norm();
    for (int i = 0; i < n_workers; ++i) {
      const double dx = (next.x[i] - prev.x[i]).norm();
      const double dl = (next.lambda[i] - prev.lambda[i]).norm();
      const double li = estimates.lipschitz[i];
      tally(rep.dual_step, dl * dl, 2.0 * li * li * dx * dx + 8.0 * d * d);
      delta_sum += (2.0 * li * li / rho - estimates.gamma[i] / 4.0) * dx * dx;
      step_sup = std::max(step_sup, dx);
    }
    const double dx0 = (next.x0 - prev.x0).norm();
    const double slack_term = 8.0 * n_workers * d * d / estimates.rho_m;
    const double lhs = lagr[j + 1] - lagr[j];
    tally(rep.descent, lhs,
          delta_sum - 0.5 * estimates.gamma_x0 * dx0 + slack_term);
    tally(rep.descent_squared, lhs,
          delta_sum - 0.5 * estimates.gamma_x0 * dx0 * dx0 + slack_term);
    steps.push_back(step_sup);
  }

  // observed sup of step norms over the trailing quarter of transitions
  if (!steps.empty()) {
    const std::size_t tail = std::max<std::size_t>(1, steps.size() / 4);
    for (std::size_t j = steps.size() - tail; j < steps.size(); ++j)
      rep.d_tilde = std::max(rep.d_tilde, steps[j]);
  }

  const double floor = estimates.loss_lower_bound - d * cfg.switch_radius;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    if (!all_sensitivity(trace.records[k])) continue;
    tally(rep.lagrangian_floor, floor, lagr[k + 1]);
  }

  if (last >= 1) {
    const auto& fin = trace.states[last];
    for (int i = 0; i < n_workers; ++i) {
      const Vector gj = grad(problem.spec, fin.x[i], problem.shards[i]);
      tally(rep.stationarity, (gj + fin.lambda[i]).norm(), d);
      const double li = estimates.lipschitz[i];
      tally(rep.consensus_gap, (fin.x[i] - fin.x0).norm(),
            (2.0 * li * li * rep.d_tilde + 8.0 * d * d) / rho);
    }
  }
  return rep;
}

std::string format_report(const TheoryReport& rep) {
  std::ostringstream out;
  out << "penalty admissible (rho*gamma_i >= 8 L_i^2): "
      << (rep.estimates.penalty_admissible ? "yes" : "NO") << "\n";
  out << "constants " << (rep.estimates.exact ? "exact" : "sampled estimate")
      << ", D = " << rep.d_used << ", D~ = " << rep.d_tilde
      << ", rho_m = " << rep.estimates.rho_m
      << ", lower bound = " << rep.estimates.loss_lower_bound << "\n";
  const TheoryCheck* checks[] = {&rep.dual_step,         &rep.descent,
                                 &rep.descent_squared,   &rep.lagrangian_floor,
                                 &rep.stationarity,      &rep.consensus_gap};
  for (const TheoryCheck* c : checks) {
    out << "  " << c->name << ": " << (c->evaluated - c->violations) << "/"
        << c->evaluated << " held";
    if (c->evaluated > 0) out << ", worst gap " << c->worst_gap;
    out << "\n";
  }
  return out.str();
}

}  // namespace sadmm
