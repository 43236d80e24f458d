#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sadmm/linalg.hpp"
#include "sadmm/objective.hpp"

namespace sadmm {

// consensus parameters seen by one worker: p = (x0, lambda_i)
struct ParamBlock {
  Vector x0;
  Vector lambda;
};

enum class SolveMode : std::uint8_t {
  exact_nlp = 0,
  predictor = 1,
  predictor_corrected = 2,
  ladmm = 3,
};

struct NewtonOptions {
  double tol = 1e-8;        // ||grad of augmented objective|| at acceptance
  int max_iter = 100;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-12;
};

struct SolveReport {
  Vector x;
  SolveMode mode = SolveMode::exact_nlp;
  double eps_norm = 0.0;  // ||grad_x L(x, p)|| at the returned point
  int newton_iters = 0;
  int corrector_iters = 0;
  int linear_solves = 0;
  std::vector<double> f_history;  // augmented objective at accepted Newton steps
};

// approximate_solve could not reach eps <= D within the corrector budget;
// carries the best point found so the caller can warm-start an exact solve
struct ToleranceUnreachable : SolverError {
  ToleranceUnreachable(std::string msg, SolveReport r)
      : SolverError(std::move(msg)), report(std::move(r)) {}
  SolveReport report;
};

struct NewtonFailure : SolverError {
  NewtonFailure(std::string msg, Vector best_iterate, double grad_norm)
      : SolverError(std::move(msg)), best(std::move(best_iterate)), eps_norm(grad_norm) {}
  Vector best;
  double eps_norm;
};

// augmented local objective J(x) + lambda^T (x - x0) + rho/2 ||x - x0||^2
double aug_value(const Objective& obj, const Vector& x, const ParamBlock& p, double rho);
Vector aug_grad(const Objective& obj, const Vector& x, const ParamBlock& p, double rho);

// Per-worker solver. Keeps the last committed solution and its parameter
// block so the tangential predictor can step between consecutive rounds.
class SubproblemEngine {
 public:
  SubproblemEngine(ObjectivePtr obj, double rho, NewtonOptions opts = {});

  void set_initial(const Vector& x);
  const Vector& current() const { return x_tilde_; }
  bool has_last_params() const { return last_params_.has_value(); }
  const ParamBlock& last_params() const;

  // Damped Newton on the augmented objective, warm-started from the current
  // iterate (or `warm_start` when given). Commits the solution and p.
  SolveReport solve_exact(const ParamBlock& p,
                          const std::optional<Vector>& warm_start = std::nullopt);

  // One tangential step x~ = x_prev - M^{-1} N dp from the last committed
  // (x, p) pair to the new parameters; exactly one linear solve, no commit.
  Vector tangential_predict(const ParamBlock& p_new) const;

  // One Newton-type correction x - M(x,p)^{-1} grad_x L(x, p); no commit.
  Vector corrector_step(const Vector& x, const ParamBlock& p) const;

  // Predictor plus correctors until ||grad_x L|| <= opt_tol, at most
  // max_correctors of them. Commits on success; throws ToleranceUnreachable
  // (carrying the best point) when the budget runs out.
  SolveReport approximate_solve(const ParamBlock& p_new, double opt_tol, int max_correctors);

  // Assembles the predictor system M at the committed iterate ahead of time.
  // M does not depend on the next round's parameters, so a worker can build
  // it while waiting between rounds and the following tangential_predict
  // reduces to one solve. Never throws; prediction results are identical
  // with or without a prepared system.
  void prepare();

  double rho() const { return rho_; }
  const Objective& objective() const { return *obj_; }

 private:
  SymMatrix aug_hessian(const Vector& x) const;
  void check_params(const ParamBlock& p) const;

  ObjectivePtr obj_;
  double rho_;
  NewtonOptions opts_;
  Vector x_tilde_;
  std::optional<ParamBlock> last_params_;
  bool initialized_ = false;
  std::optional<SymMatrix> prepared_m_;  // aug Hessian assembled at prepared_at_
  Vector prepared_at_;
};

}  // namespace sadmm
