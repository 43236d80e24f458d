#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sadmm/config.hpp"
#include "sadmm/linalg.hpp"
#include "sadmm/subproblem.hpp"

namespace sadmm {

enum class RunStatus : std::uint8_t {
  not_started = 0,
  converged = 1,
  max_iterations = 2,
};

std::string to_string(RunStatus s);
std::string to_string(SolveMode m);

struct WorkerStats {
  int worker_id = 0;
  SolveMode mode = SolveMode::exact_nlp;
  bool fell_back = false;  // sensitivity directive escalated to an exact solve
  double eps_norm = 0.0;
  double local_loss = 0.0;
  int newton_iters = 0;
  int corrector_iters = 0;
  int linear_solves = 0;
  double wall_time_s = 0.0;
};

struct IterationRecord {
  int k = 0;
  double r_norm = 0.0;  // ||stack_i(x_i - x0)||
  double s_norm = 0.0;  // ||rho * sum_i (x_i^{k+1} - x_i^k)||
  double aug_lagrangian = 0.0;
  double eps_max = 0.0;
  int nlp_solves = 0;     // workers that ran an exact solve this iteration
  int linear_solves = 0;  // symmetric solves across all workers
  double max_worker_wall_time_s = 0.0;
  std::string mode;  // exact | sensitivity | mixed | ladmm
  std::vector<WorkerStats> workers;
};

// full iterate snapshot, retained when SolverConfig.keep_states is set
struct StateSnapshot {
  Vector x0;
  std::vector<Vector> x;
  std::vector<Vector> lambda;
  std::vector<double> local_loss;
};

struct RunTrace {
  RunStatus status = RunStatus::not_started;
  Mode mode = Mode::admm;
  int n = 0;
  int n_workers = 0;
  std::vector<IterationRecord> records;
  // states[0] is the initial state; states[k+1] follows records[k]
  std::vector<StateSnapshot> states;
  // final iterates, present whether or not snapshots were kept
  Vector x0_final;
  std::vector<Vector> x_final;
  std::vector<Vector> lambda_final;
};

}  // namespace sadmm
