#pragma once

#include <cstdint>
#include <vector>

#include "sadmm/config.hpp"
#include "sadmm/trace.hpp"
#include "sadmm/transport.hpp"

namespace sadmm {

struct Problem {
  ModelSpec spec;
  std::vector<Shard> shards;
};

// soft threshold S_kappa(a) = max(0, a - kappa) - max(0, -a - kappa)
double shrinkage(double a, double kappa);
Vector shrinkage(const Vector& a, double kappa);

// Closed-form consensus update:
//   none: mean_i(x_i + lambda_i / rho)
//   l1:   S_{omega/(N rho)} applied to that mean
//   l2:   sum_i(x_i + lambda_i / rho) / (2 omega / rho + N)
Vector update_x0(const SolverConfig& cfg, const std::vector<Vector>& x,
                 const std::vector<Vector>& lambda);

// lambda + rho (x - x0)
Vector dual_update(const Vector& lambda, const Vector& x, const Vector& x0, double rho);

struct Residuals {
  Vector r;  // stacked per-worker primal gaps x_i - x0, length N*n
  Vector s;  // rho * sum_i (x_i^{k+1} - x_i^k), length n
};
Residuals residuals(const std::vector<Vector>& x_new, const std::vector<Vector>& x_old,
                    const Vector& x0_new, double rho);

// Per-worker solve directive for round k. `prev_local_residual` is
// ||x_i^k - x0^k|| from the previous round (ignored unless mode == sadmm),
// `uniform_draw` a [0,1) sample from the worker's stream (ssadmm only).
// k = 0 resolves to an exact solve in every mode.
Directive choose_solve_mode(Mode mode, int k, double prev_local_residual, double switch_radius,
                            double delta, double uniform_draw);

// linearized proximal step (rho x0 + mu x_k - grad - lambda) / (rho + mu)
Vector ladmm_step(const Vector& grad_xk, const Vector& x_k, const Vector& x0,
                  const Vector& lambda, double rho, double mu);

double regularizer_value(Reg reg, double omega, const Vector& x0);

// h(x0) + sum_i [ J_i(x_i) + lambda_i^T (x_i - x0) + rho/2 ||x_i - x0||^2 ]
double aug_lagrangian(const SolverConfig& cfg, const Vector& x0, const std::vector<Vector>& x,
                      const std::vector<Vector>& lambda, const std::vector<double>& local_loss);

// splitmix64; derives independent substreams from (seed, stream id)
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// shared initial iterate, entries uniform in [-0.5, 0.5]
Vector initial_iterate(std::uint64_t seed, int n);

// Drives the full consensus loop over an assigned-or-not worker pool
// (assignment happens inside). Deterministic given cfg.rng_seed; the
// transport carrier does not influence any recorded value.
RunTrace run(const SolverConfig& cfg, const Problem& problem, MasterEndpoints& workers);

}  // namespace sadmm
