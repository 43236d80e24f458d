#include "sadmm/runner.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace sadmm {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::not_started: return "not_started";
    case RunStatus::converged: return "converged";
    case RunStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

std::string to_string(SolveMode m) {
  switch (m) {
    case SolveMode::exact_nlp: return "exact_nlp";
    case SolveMode::predictor: return "predictor";
    case SolveMode::predictor_corrected: return "predictor_corrected";
    case SolveMode::ladmm: return "ladmm";
  }
  return "unknown";
}

Experiment prepare_experiment(const RunConfig& cfg) {
  validate(cfg.solver);
  Experiment exp;
  exp.cfg = cfg;
  exp.data = prepare_dataset(cfg.dataset, cfg.model, cfg.solver.n_workers);
  exp.problem.spec = cfg.model;
  exp.problem.shards = exp.data.shards;
  return exp;
}

RunTrace run_loopback(const SolverConfig& cfg, const Problem& problem) {
  LoopbackCluster cluster(cfg.n_workers);
  return run(cfg, problem, cluster.endpoints());
}

RunTrace run_tcp(const SolverConfig& cfg, const Problem& problem, TcpListener& listener) {
  MasterEndpoints endpoints = accept_workers(listener, cfg.n_workers);
  return run(cfg, problem, endpoints);
}

EvalSummary evaluate(const Experiment& exp, const Vector& x0) {
  EvalSummary out;
  if (exp.data.data.classification) {
    const Eigen::Index rows = exp.data.data.rows();
    Eigen::Index correct = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Vector logits =
          predict(exp.problem.spec, x0, exp.data.data.features.row(r).transpose());
      Eigen::Index arg;
      logits.maxCoeff(&arg);
      if (static_cast<int>(arg) == exp.data.data.classes[r]) ++correct;
    }
    out.accuracy = rows > 0 ? static_cast<double>(correct) / static_cast<double>(rows) : 0.0;
  } else {
    out.regression = true;
    out.fit = evaluate_fit(exp.problem.spec, x0, exp.data.data);
  }
  return out;
}

RunArtifacts write_run_outputs(const Experiment& exp, const RunTrace& trace,
                               const std::string& metrics_name,
                               const std::string& meta_name) {
  namespace fs = std::filesystem;
  const fs::path dir(exp.cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  RunArtifacts art;
  art.metrics_path = (dir / metrics_name).string();
  write_metrics(trace, art.metrics_path);

  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["status"] = to_string(trace.status);
  meta["iterations"] = trace.records.size();
  if (!trace.records.empty()) {
    const auto& fin = trace.records.back();
    meta["final"] = {{"r_norm", fin.r_norm},
                     {"s_norm", fin.s_norm},
                     {"aug_lagrangian", fin.aug_lagrangian},
                     {"eps_max", fin.eps_max}};
    const EvalSummary ev = evaluate(exp, trace.x0_final);
    if (ev.regression)
      meta["eval"] = {{"mse", ev.fit.mse}, {"r_squared", ev.fit.r_squared}};
    else
      meta["eval"] = {{"accuracy", ev.accuracy}};
  }
  meta["config"] = nlohmann::ordered_json::parse(serialize_run_config(exp.cfg));

  art.meta_path = (dir / meta_name).string();
  std::ofstream out(art.meta_path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + art.meta_path + "'");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write to '" + art.meta_path + "' failed");
  return art;
}

std::string summarize_trace(const RunTrace& trace) {
  std::ostringstream out;
  out << "status " << to_string(trace.status) << ", " << trace.records.size()
      << " iterations\n";
  for (const auto& rec : trace.records) {
    out << "  k=" << rec.k << " r=" << rec.r_norm << " s=" << rec.s_norm
        << " L=" << rec.aug_lagrangian << " eps_max=" << rec.eps_max
        << " mode=" << rec.mode << "\n";
  }
  return out.str();
}

}  // namespace sadmm
