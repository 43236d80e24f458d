#include "sadmm/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sadmm/consensus.hpp"
#include "sadmm/model.hpp"
#include "sadmm/runner.hpp"
#include "sadmm/theory.hpp"

namespace sadmm {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

Shard random_shard(const ModelSpec& spec, std::mt19937_64& rng, int rows) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Shard sh;
  sh.features.resize(rows, spec.input_dim);
  for (Eigen::Index i = 0; i < sh.features.size(); ++i) sh.features.data()[i] = gauss(rng);
  if (spec.kind == ModelKind::softmax_classifier) {
    std::uniform_int_distribution<int> cls(0, spec.outputs - 1);
    sh.classes.resize(rows);
    for (int r = 0; r < rows; ++r) sh.classes[r] = cls(rng);
  } else {
    sh.labels.resize(rows, spec.outputs);
    for (Eigen::Index i = 0; i < sh.labels.size(); ++i) sh.labels.data()[i] = gauss(rng);
  }
  return sh;
}

CheckResult gradcheck_model(const std::string& name, const ModelSpec& spec) {
  CheckResult res;
  res.name = "gradcheck/" + name;
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(mix_seed(31 + seed, 5000));
    const Shard sh = random_shard(spec, rng, 20);
    Vector x(param_count(spec));
    std::normal_distribution<double> gauss(0.0, 0.5);
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = gauss(rng);
    const Vector g = grad(spec, x, sh);
    const Vector g_fd =
        fd_gradient([&](const Vector& z) { return loss(spec, z, sh).value; }, x);
    worst = std::max(worst, (g - g_fd).norm() / (1.0 + g.norm()));
  }
  res.passed = worst <= 1e-5;
  res.detail = "max relative error " + fmt(worst) + " over 100 seeds";
  return res;
}

// small well-conditioned regression problem on linear features
Problem quadratic_problem(int n_workers, int rows_per_worker, int dim,
                          std::uint64_t seed) {
  Problem pb;
  pb.spec.kind = ModelKind::linear_features;
  pb.spec.input_dim = dim;
  pb.spec.outputs = 1;
  pb.spec.basis = Basis::raw;
  std::mt19937_64 rng(mix_seed(seed, 6000));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector w(dim);
  for (int j = 0; j < dim; ++j) w[j] = gauss(rng);
  for (int i = 0; i < n_workers; ++i) {
    Shard sh;
    sh.features.resize(rows_per_worker, dim);
    for (Eigen::Index j = 0; j < sh.features.size(); ++j) sh.features.data()[j] = gauss(rng);
    sh.labels = sh.features * w;
    for (Eigen::Index r = 0; r < rows_per_worker; ++r) sh.labels(r, 0) += 0.1 * gauss(rng);
    pb.shards.push_back(std::move(sh));
  }
  return pb;
}

SolverConfig base_config(int n_workers) {
  SolverConfig cfg;
  cfg.n_workers = n_workers;
  cfg.rho = 2.0;
  cfg.max_iter = 60;
  cfg.keep_states = true;
  cfg.deterministic_timing = true;
  return cfg;
}

bool traces_equal(const RunTrace& a, const RunTrace& b, double tol) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    if (std::abs(a.records[k].r_norm - b.records[k].r_norm) > tol) return false;
    if (std::abs(a.records[k].s_norm - b.records[k].s_norm) > tol) return false;
    if (std::abs(a.records[k].aug_lagrangian - b.records[k].aug_lagrangian) > tol)
      return false;
  }
  return (a.x0_final - b.x0_final).norm() <= tol;
}

}  // namespace

std::vector<CheckResult> run_gradcheck() {
  std::vector<CheckResult> out;
  ModelSpec lin{ModelKind::linear_features, 4, 0, 1, Basis::raw};
  out.push_back(gradcheck_model("linear_raw", lin));
  lin.basis = Basis::affine;
  out.push_back(gradcheck_model("linear_affine", lin));
  out.push_back(
      gradcheck_model("mlp_regressor", {ModelKind::mlp_regressor, 4, 5, 1, Basis::raw}));
  out.push_back(gradcheck_model("softmax_classifier",
                                {ModelKind::softmax_classifier, 4, 5, 4, Basis::raw}));
  return out;
}

std::vector<CheckResult> run_invariant_checks() {
  std::vector<CheckResult> out;

  {
    CheckResult r;
    r.name = "invariants/closed_form_updates";
    const double s1 = shrinkage(1.2, 0.5);
    const double s2 = shrinkage(0.3, 0.5);
    const double s3 = shrinkage(-2.0, 0.5);
    SolverConfig cfg;
    cfg.n_workers = 2;
    cfg.rho = 1.0;
    std::vector<Vector> xs{Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
    std::vector<Vector> ls{Vector::Zero(1), Vector::Zero(1)};
    const double mean = update_x0(cfg, xs, ls)[0];
    cfg.reg = Reg::l2;
    cfg.omega = 1.0;
    std::vector<Vector> xs2{Vector::Constant(1, 3.0), Vector::Constant(1, 5.0)};
    const double l2v = update_x0(cfg, xs2, ls)[0];
    r.passed = s1 == 0.7 && s2 == 0.0 && s3 == -1.5 && mean == 2.0 && l2v == 2.0;
    r.detail = "shrinkage (" + fmt(s1) + ", " + fmt(s2) + ", " + fmt(s3) + "), mean " +
               fmt(mean) + ", l2 " + fmt(l2v);
    out.push_back(r);
  }

  const Problem pb = quadratic_problem(3, 60, 5, 11);

  {
    CheckResult r;
    r.name = "invariants/dual_step_identity";
    SolverConfig cfg = base_config(3);
    const RunTrace tr = run_loopback(cfg, pb);
    double worst = 0.0;
    for (std::size_t t = 1; t < tr.states.size(); ++t) {
      for (int i = 0; i < 3; ++i) {
        const double dl = (tr.states[t].lambda[i] - tr.states[t - 1].lambda[i]).norm();
        const double gap = cfg.rho * (tr.states[t].x[i] - tr.states[t].x0).norm();
        worst = std::max(worst, std::abs(dl - gap));
      }
    }
    r.passed = worst <= 1e-12;
    r.detail = "max |  ||dlambda|| - rho ||x - x0||  | = " + fmt(worst);
    out.push_back(r);
  }

  {
    CheckResult r;
    r.name = "invariants/quadratic_sensitivity_equivalence";
    SolverConfig cfg = base_config(3);
    const RunTrace exact = run_loopback(cfg, pb);
    cfg.mode = Mode::sadmm;
    cfg.switch_radius = 1e9;  // predictor from round 1 on
    const RunTrace sens = run_loopback(cfg, pb);
    r.passed = traces_equal(exact, sens, 1e-8);
    r.detail = "residual and objective curves match within 1e-8";
    out.push_back(r);
  }

  {
    CheckResult r;
    r.name = "invariants/deterministic_repeat";
    SolverConfig cfg = base_config(3);
    cfg.mode = Mode::ssadmm;
    cfg.max_iter = 25;
    const RunTrace a = run_loopback(cfg, pb);
    const RunTrace b = run_loopback(cfg, pb);
    r.passed = traces_equal(a, b, 0.0);
    r.detail = "two runs with one seed are bitwise identical";
    out.push_back(r);
  }

  {
    CheckResult r;
    r.name = "invariants/residual_bound_honored";
    SolverConfig cfg = base_config(3);
    cfg.mode = Mode::sadmm;
    cfg.opt_tol = 1e-3;
    const RunTrace tr = run_loopback(cfg, pb);
    r.passed = true;
    double worst = 0.0;
    for (const auto& rec : tr.records) {
      bool all_sens = true;
      for (const auto& w : rec.workers)
        if (w.mode == SolveMode::exact_nlp || w.fell_back) all_sens = false;
      if (!all_sens) continue;
      worst = std::max(worst, rec.eps_max);
      if (rec.eps_max > cfg.opt_tol) r.passed = false;
    }
    r.detail = "max eps on sensitivity rounds " + fmt(worst) + " vs bound " +
               fmt(cfg.opt_tol);
    out.push_back(r);
  }

  return out;
}

std::vector<CheckResult> run_theory_checks() {
  std::vector<CheckResult> out;
  // enough rows per shard that the loss Hessians sit near 2 I: the admissible
  // penalty then lands where the linear ||dx0|| descent term is provably
  // dominated by the 8 N D^2 / rho_m slack
  const Problem pb = quadratic_problem(4, 400, 6, 23);

  SolverConfig cfg = base_config(4);
  cfg.mode = Mode::sadmm;
  cfg.max_iter = 200;
  cfg.opt_tol = 1.0;
  cfg.switch_radius = 0.5;
  cfg.stop_tol_primal = 0.0;  // fixed-length run
  cfg.stop_tol_dual = 0.0;

  {
    AnalysisEstimates probe = estimate_analysis(pb, cfg);
    double rho = 0.0;
    for (std::size_t i = 0; i < probe.lipschitz.size(); ++i)
      rho = std::max(rho,
                     penalty_threshold(probe.lipschitz[i], probe.hessian_min_eig[i]));
    cfg.rho = 1.05 * rho;
  }

  const RunTrace tr = run_loopback(cfg, pb);
  const AnalysisEstimates est = estimate_analysis(pb, cfg);
  const TheoryReport rep = check_convergence_theory(pb, tr, est, cfg);

  {
    CheckResult r;
    r.name = "theory/penalty_admissible";
    r.passed = est.penalty_admissible;
    r.detail = "rho = " + fmt(cfg.rho) + ", rho_m = " + fmt(est.rho_m);
    out.push_back(r);
  }
  {
    CheckResult r;
    r.name = "theory/bounds_hold";
    r.passed = rep.total_violations() == 0;
    r.detail = std::to_string(rep.total_violations()) + " violations\n" +
               format_report(rep);
    out.push_back(r);
  }
  {
    CheckResult r;
    r.name = "theory/guard_trips_on_small_penalty";
    SolverConfig tiny = cfg;
    tiny.rho = 1e-3;
    const AnalysisEstimates bad = estimate_analysis(pb, tiny);
    r.passed = !bad.penalty_admissible;
    r.detail = "penalty_admissible = " + std::string(bad.penalty_admissible ? "yes" : "no");
    out.push_back(r);
  }
  return out;
}

}  // namespace sadmm
