#pragma once

#include <string>

#include "sadmm/consensus.hpp"
#include "sadmm/data_io.hpp"

namespace sadmm {

// A fully materialized run: config, sharded problem, and the pooled dataset
// kept around for final-fit evaluation.
struct Experiment {
  RunConfig cfg;
  Problem problem;
  PreparedData data;
};

Experiment prepare_experiment(const RunConfig& cfg);

// Consensus loop over in-process workers.
RunTrace run_loopback(const SolverConfig& cfg, const Problem& problem);

// Consensus loop over TCP workers; accepts cfg.n_workers connections first.
RunTrace run_tcp(const SolverConfig& cfg, const Problem& problem, TcpListener& listener);

struct EvalSummary {
  bool regression = false;
  FitQuality fit;          // regression datasets
  double accuracy = 0.0;   // classification: fraction correct over the pool
};

EvalSummary evaluate(const Experiment& exp, const Vector& x0);

struct RunArtifacts {
  std::string metrics_path;
  std::string meta_path;
};

// Writes <out>/<metrics name> and <out>/<meta name>; creates the directory.
RunArtifacts write_run_outputs(const Experiment& exp, const RunTrace& trace,
                               const std::string& metrics_name,
                               const std::string& meta_name = "run_meta.json");

// One line per iteration record, for console reporting.
std::string summarize_trace(const RunTrace& trace);

}  // namespace sadmm
