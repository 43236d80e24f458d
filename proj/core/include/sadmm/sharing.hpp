#pragma once

#include <vector>

#include "sadmm/subproblem.hpp"
#include "sadmm/trace.hpp"

namespace sadmm {

// Exchange-style coupling: min sum_i f_i(x_i) subject to sum_i x_i = 0,
// handled by the same per-worker engines as the consensus path. The shared
// dual and the running mean enter each subproblem only through its parameter
// block, so the tangential predictor applies unchanged.
struct SharingConfig {
  double rho = 1.0;
  bool sensitivity = false;  // predictor plus correctors after round 0
  double opt_tol = 0.01;     // residual bound for sensitivity solves
  int max_correctors = 20;
  int max_iter = 500;
  double tol_feasibility = 1e-10;  // on ||sum_i x_i||
  double tol_step = 1e-10;         // on max_i ||x_i step||
  // worker acceptance must sit well inside the outer tolerances, or the
  // iterates freeze before the feasibility target is reachable
  NewtonOptions newton{.tol = 1e-12};
};

struct SharingRecord {
  int k = 0;
  double feasibility_norm = 0.0;  // ||sum_i x_i||
  double max_step = 0.0;
  double eps_max = 0.0;
  int exact_solves = 0;
};

struct SharingTrace {
  RunStatus status = RunStatus::not_started;
  std::vector<SharingRecord> records;
  std::vector<Vector> x;
  Vector xbar;
  Vector lambda;
};

SharingTrace run_sharing(const std::vector<ObjectivePtr>& objectives,
                         const SharingConfig& cfg);

}  // namespace sadmm
