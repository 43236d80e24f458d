#pragma once

#include <string>
#include <vector>

#include "sadmm/consensus.hpp"
#include "sadmm/trace.hpp"

namespace sadmm {

// Constants entering the descent and boundedness checks. Exact (eigenvalue)
// quantities for linear-feature models, sampled estimates otherwise.
struct AnalysisEstimates {
  std::vector<double> lipschitz;        // per-worker gradient Lipschitz constant
  std::vector<double> hessian_min_eig;  // per-worker smallest loss-Hessian eigenvalue
  std::vector<double> gamma;            // subproblem strong-convexity moduli, min_eig + rho
  double rho = 0.0;
  double rho_m = 0.0;      // min(rho, min_i gamma_i)
  double gamma_x0 = 0.0;   // collector modulus: N rho, plus 2 omega under l2
  double loss_lower_bound = 0.0;  // certified lower bound on the pooled objective
  bool exact = false;             // true when the constants are eigenvalue-exact
  bool penalty_admissible = false;  // rho * gamma_i >= 8 L_i^2 for every worker
};

AnalysisEstimates estimate_analysis(const Problem& problem, const SolverConfig& cfg);

// Smallest rho with rho * (min_eig + rho) >= 8 L^2.
double penalty_threshold(double lipschitz, double hessian_min_eig);

struct TheoryCheck {
  const char* name = "";
  int evaluated = 0;
  int violations = 0;
  double worst_gap = 0.0;  // largest lhs - rhs seen; negative when the bound held
};

// Diagnostic replay of the convergence-analysis inequalities along a stored
// trace. Requires keep_states and a linear-feature model; transitions are
// evaluated only once both endpoints are post-solve iterates.
struct TheoryReport {
  AnalysisEstimates estimates;
  double d_used = 0.0;   // optimality-residual bound in force for the trace
  double d_tilde = 0.0;  // sup of step norms over the trailing quarter of iterations
  TheoryCheck dual_step;         // ||dlambda||^2 <= 2 L^2 ||dx||^2 + 8 D^2
  TheoryCheck descent;           // Lagrangian decrease, ||dx0|| term linear as printed
  TheoryCheck descent_squared;   // same bound with ||dx0||^2, logged alongside
  TheoryCheck lagrangian_floor;  // L^k >= lower bound - D R on all-sensitivity rounds
  TheoryCheck stationarity;      // final ||grad J_i + lambda_i|| <= D
  TheoryCheck consensus_gap;     // final ||x_i - x0|| <= (2 L^2 Dt + 8 D^2) / rho

  int total_violations() const;  // squared descent variant excluded
};

TheoryReport check_convergence_theory(const Problem& problem, const RunTrace& trace,
                                      const AnalysisEstimates& estimates,
                                      const SolverConfig& cfg);

std::string format_report(const TheoryReport& report);

}  // namespace sadmm
