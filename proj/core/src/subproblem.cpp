#include "sadmm/subproblem.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace sadmm {

namespace {

void check_block(const Objective& obj, const ParamBlock& p) {
  if (p.x0.size() != obj.dim() || p.lambda.size() != obj.dim())
    throw ConfigError("subproblem: parameter block dimension mismatch");
  if (!p.x0.allFinite() || !p.lambda.allFinite())
    throw NumericalError("subproblem: non-finite parameters");
}

}  // namespace

double aug_value(const Objective& obj, const Vector& x, const ParamBlock& p, double rho) {
  check_block(obj, p);
  const Vector d = x - p.x0;
  const double v = obj.value(x) + p.lambda.dot(d) + 0.5 * rho * d.squaredNorm();
  if (!std::isfinite(v)) throw NumericalError("aug_value: non-finite evaluation");
  return v;
}

Vector aug_grad(const Objective& obj, const Vector& x, const ParamBlock& p, double rho) {
  check_block(obj, p);
  Vector g = obj.gradient(x) + p.lambda + rho * (x - p.x0);
  if (!g.allFinite()) throw NumericalError("aug_grad: non-finite evaluation");
  return g;
}

SubproblemEngine::SubproblemEngine(ObjectivePtr obj, double rho, NewtonOptions opts)
    : obj_(std::move(obj)), rho_(rho), opts_(opts) {
  if (!obj_) throw ConfigError("SubproblemEngine: null objective");
  if (!(rho_ > 0.0)) throw ConfigError("SubproblemEngine: rho must be positive");
}

void SubproblemEngine::set_initial(const Vector& x) {
  if (x.size() != obj_->dim()) throw ConfigError("SubproblemEngine: initial point dim mismatch");
  if (!x.allFinite()) throw NumericalError("SubproblemEngine: non-finite initial point");
  x_tilde_ = x;
  last_params_.reset();
  initialized_ = true;
}

const ParamBlock& SubproblemEngine::last_params() const {
  if (!last_params_) throw SolverError("SubproblemEngine: no committed parameters yet");
  return *last_params_;
}

SymMatrix SubproblemEngine::aug_hessian(const Vector& x) const {
  Matrix m = obj_->hessian(x).mat();
  m.diagonal().array() += rho_;
  return SymMatrix(std::move(m));
}

SolveReport SubproblemEngine::solve_exact(const ParamBlock& p,
                                          const std::optional<Vector>& warm_start) {
  if (!initialized_) throw SolverError("SubproblemEngine: not initialized");
  check_block(*obj_, p);

  Vector x = warm_start ? *warm_start : x_tilde_;
  SolveReport rep;
  rep.mode = SolveMode::exact_nlp;

  Vector g = aug_grad(*obj_, x, p, rho_);
  double gnorm = g.norm();
  double f = aug_value(*obj_, x, p, rho_);
  rep.f_history.push_back(f);

  while (gnorm > opts_.tol) {
    if (rep.newton_iters >= opts_.max_iter)
      throw NewtonFailure("solve_exact: max Newton iterations (" +
                              std::to_string(opts_.max_iter) + ") exceeded, ||grad|| = " +
                              std::to_string(gnorm),
                          x, gnorm);
    const SymMatrix m = aug_hessian(x);
    Vector dir = solve_sym(m, -g);
    ++rep.linear_solves;
    double gd = g.dot(dir);
    if (gd >= 0.0) {  // shifted factorization should prevent this; guard anyway
      dir = -g;
      gd = -gnorm * gnorm;
    }

    double t = 1.0;
    double f_next;
    // Near the minimizer the objective moves by less than one ulp per step
    // and the raw Armijo test would reject the (exact) Newton step; allow
    // rounding-level non-decrease so the gradient can still be driven down.
    const double plateau = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
    for (;;) {
      f_next = aug_value(*obj_, x + t * dir, p, rho_);
      if (f_next <= f + opts_.armijo_c * t * gd + plateau) break;
      t *= opts_.backtrack;
      if (t < opts_.min_step)
        throw NewtonFailure("solve_exact: line search step below " +
                                std::to_string(opts_.min_step),
                            x, gnorm);
    }
    x += t * dir;
    f = f_next;
    ++rep.newton_iters;
    rep.f_history.push_back(f);
    g = aug_grad(*obj_, x, p, rho_);
    gnorm = g.norm();
  }

  rep.x = x;
  rep.eps_norm = gnorm;
  x_tilde_ = x;
  last_params_ = p;
  return rep;
}

Vector SubproblemEngine::tangential_predict(const ParamBlock& p_new) const {
  if (!last_params_)
    throw SolverError("tangential_predict: no previous solution to step from");
  check_block(*obj_, p_new);
  // grad_x L is linear in p, so the predictor right-hand side is available in
  // closed form: N dp = dlambda - rho dx0
  const Vector rhs = rho_ * (p_new.x0 - last_params_->x0) - (p_new.lambda - last_params_->lambda);
  if (prepared_m_ && prepared_at_.size() == x_tilde_.size() &&
      (prepared_at_.array() == x_tilde_.array()).all())
    return x_tilde_ + solve_sym(*prepared_m_, rhs);
  const SymMatrix m = aug_hessian(x_tilde_);
  return x_tilde_ + solve_sym(m, rhs);
}

void SubproblemEngine::prepare() {
  if (!initialized_ || !last_params_) return;
  try {
    SymMatrix m = aug_hessian(x_tilde_);
    prepared_m_ = std::move(m);
    prepared_at_ = x_tilde_;
  } catch (const Error&) {
    // let the next in-round assembly surface the failure where it is reported
    prepared_m_.reset();
  }
}

Vector SubproblemEngine::corrector_step(const Vector& x, const ParamBlock& p) const {
  check_block(*obj_, p);
  const SymMatrix m = aug_hessian(x);
  const Vector g = aug_grad(*obj_, x, p, rho_);
  return x - solve_sym(m, g);
}

SolveReport SubproblemEngine::approximate_solve(const ParamBlock& p_new, double opt_tol,
                                                int max_correctors) {
  if (!(opt_tol > 0.0)) throw ConfigError("approximate_solve: opt_tol must be positive");
  SolveReport rep;
  rep.x = tangential_predict(p_new);
  rep.linear_solves = 1;
  rep.eps_norm = aug_grad(*obj_, rep.x, p_new, rho_).norm();

  while (rep.eps_norm > opt_tol && rep.corrector_iters < max_correctors) {
    rep.x = corrector_step(rep.x, p_new);
    ++rep.corrector_iters;
    ++rep.linear_solves;
    rep.eps_norm = aug_grad(*obj_, rep.x, p_new, rho_).norm();
  }
  rep.mode = rep.corrector_iters == 0 ? SolveMode::predictor : SolveMode::predictor_corrected;
  if (rep.eps_norm > opt_tol)
    throw ToleranceUnreachable("approximate_solve: ||eps|| = " + std::to_string(rep.eps_norm) +
                                   " > " + std::to_string(opt_tol) + " after " +
                                   std::to_string(max_correctors) + " correctors",
                               rep);
  x_tilde_ = rep.x;
  last_params_ = p_new;
  return rep;
}

}  // namespace sadmm
