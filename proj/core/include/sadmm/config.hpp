#pragma once

#include <cstdint>
#include <string>

#include "sadmm/model.hpp"

namespace sadmm {

enum class Mode : std::uint8_t { admm = 0, sadmm = 1, ssadmm = 2, ladmm = 3 };
enum class Reg : std::uint8_t { none = 0, l1 = 1, l2 = 2 };
enum class ShardPolicy : std::uint8_t { contiguous = 0, round_robin = 1 };

std::string to_string(Mode m);
std::string to_string(Reg r);
Mode mode_from_string(const std::string& s);
Reg reg_from_string(const std::string& s);

struct SolverConfig {
  Mode mode = Mode::admm;
  int n_workers = 1;
  double rho = 1.0;
  Reg reg = Reg::none;
  double omega = 0.0;          // regularizer weight
  double switch_radius = 0.2;  // R: solve exactly while ||x_i - x0|| > R (sadmm)
  double opt_tol = 0.01;       // D: sensitivity-mode optimality residual bound
  double newton_tol = 1e-8;
  int max_correctors = 20;
  int max_iter = 200;
  double ssadmm_delta = 0.8;   // exact-solve probability decay delta^k
  double ladmm_mu = 10000.0;
  std::uint64_t rng_seed = 0;
  // <= 0 means the defaults 1e-6*sqrt(N*n) and 1e-6*sqrt(n)
  double stop_tol_primal = -1.0;
  double stop_tol_dual = -1.0;
  // solve round-(k+1) exact subproblems at the previous round's parameters
  bool exact_solve_uses_stale_params = false;
  // report 0.0 wall times so traces compare bitwise across transports
  bool deterministic_timing = false;
  // retain per-iteration state snapshots (needed by the theory checks)
  bool keep_states = false;
};

// throws ConfigError on out-of-range values
void validate(const SolverConfig& cfg);

double stop_tol_primal_effective(const SolverConfig& cfg, int n);
double stop_tol_dual_effective(const SolverConfig& cfg, int n);

enum class DatasetKind : std::uint8_t {
  csv = 0,
  synthetic_regression = 1,
  synthetic_classification = 2,
};

enum class NormalizePolicy : std::uint8_t {
  features_and_labels = 0,
  features_only = 1,
  none = 2,
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synthetic_regression;
  std::string path;  // csv only
  int label_cols = 1;
  bool classification = false;
  int rows = 1000;       // synthetic only
  int features = 4;      // synthetic only
  int classes = 4;       // synthetic_classification only
  std::uint64_t seed = 7;
  double noise_std = 0.2;  // synthetic_regression only
  NormalizePolicy normalize = NormalizePolicy::features_and_labels;
  ShardPolicy shard_policy = ShardPolicy::contiguous;
};

enum class TransportKind : std::uint8_t { loopback = 0, tcp = 1 };

struct TransportConfig {
  TransportKind kind = TransportKind::loopback;
  std::string listen = "127.0.0.1:0";  // tcp master bind address
};

struct OutputConfig {
  std::string dir = "out";
  std::string metrics = "metrics.csv";
};

struct RunConfig {
  int schema_version = 1;
  SolverConfig solver;
  ModelSpec model;
  DatasetConfig dataset;
  TransportConfig transport;
  OutputConfig output;
};

bool operator==(const RunConfig& a, const RunConfig& b);

// JSON codec; parse validates and rejects unknown solver fields
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace sadmm
