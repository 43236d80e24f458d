#include "sadmm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sadmm {

namespace {

using Json = nlohmann::ordered_json;

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::admm: return "admm";
    case Mode::sadmm: return "sadmm";
    case Mode::ssadmm: return "ssadmm";
    case Mode::ladmm: return "ladmm";
  }
  throw ConfigError("unknown mode");
}

std::string to_string(Reg r) {
  switch (r) {
    case Reg::none: return "none";
    case Reg::l1: return "l1";
    case Reg::l2: return "l2";
  }
  throw ConfigError("unknown regularizer");
}

Mode mode_from_string(const std::string& s) {
  if (s == "admm") return Mode::admm;
  if (s == "sadmm") return Mode::sadmm;
  if (s == "ssadmm") return Mode::ssadmm;
  if (s == "ladmm") return Mode::ladmm;
  throw ConfigError("unknown mode '" + s + "'");
}

Reg reg_from_string(const std::string& s) {
  if (s == "none") return Reg::none;
  if (s == "l1") return Reg::l1;
  if (s == "l2") return Reg::l2;
  throw ConfigError("unknown regularizer '" + s + "'");
}

void validate(const SolverConfig& cfg) {
  if (cfg.n_workers < 1) throw ConfigError("solver.n_workers must be >= 1");
  if (!(cfg.rho > 0.0)) throw ConfigError("solver.rho must be positive");
  if (cfg.omega < 0.0) throw ConfigError("solver.omega must be non-negative");
  if (cfg.switch_radius < 0.0) throw ConfigError("solver.switch_radius must be non-negative");
  if (!(cfg.opt_tol > 0.0)) throw ConfigError("solver.opt_tol must be positive");
  if (!(cfg.newton_tol > 0.0)) throw ConfigError("solver.newton_tol must be positive");
  if (cfg.max_correctors < 0) throw ConfigError("solver.max_correctors must be >= 0");
  if (cfg.max_iter < 0) throw ConfigError("solver.max_iter must be >= 0");
  if (!(cfg.ssadmm_delta > 0.0) || cfg.ssadmm_delta > 1.0)
    throw ConfigError("solver.ssadmm_delta must lie in (0, 1]");
  if (!(cfg.ladmm_mu > 0.0)) throw ConfigError("solver.ladmm_mu must be positive");
}

double stop_tol_primal_effective(const SolverConfig& cfg, int n) {
  if (cfg.stop_tol_primal > 0.0) return cfg.stop_tol_primal;
  return 1e-6 * std::sqrt(static_cast<double>(cfg.n_workers) * n);
}

double stop_tol_dual_effective(const SolverConfig& cfg, int n) {
  if (cfg.stop_tol_dual > 0.0) return cfg.stop_tol_dual;
  return 1e-6 * std::sqrt(static_cast<double>(n));
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_run_config(a) == serialize_run_config(b);
}

namespace {

void reject_unknown(const Json& j, const std::string& section,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key))
      throw ConfigError("config: unknown field '" + section + "." + key + "'");
}

double tol_field(const Json& j, const char* key) {
  if (!j.contains(key)) return -1.0;
  if (j[key].is_string()) {
    if (j[key] == "auto") return -1.0;
    throw ConfigError(std::string("config: ") + key + " must be a number or \"auto\"");
  }
  return j[key].get<double>();
}

Json tol_json(double v) {
  if (v > 0.0) return Json(v);
  return Json("auto");
}

SolverConfig parse_solver(const Json& j) {
  reject_unknown(j, "solver",
                 {"mode", "n_workers", "rho", "reg", "omega", "switch_radius", "opt_tol",
                  "newton_tol", "max_correctors", "max_iter", "ssadmm_delta", "ladmm_mu",
                  "rng_seed", "stop_tol_primal", "stop_tol_dual", "exact_solve_uses_stale_params",
                  "deterministic_timing", "keep_states"});
  SolverConfig s;
  if (j.contains("mode")) s.mode = mode_from_string(j["mode"].get<std::string>());
  if (j.contains("n_workers")) s.n_workers = j["n_workers"].get<int>();
  if (j.contains("rho")) s.rho = j["rho"].get<double>();
  if (j.contains("reg")) s.reg = reg_from_string(j["reg"].get<std::string>());
  if (j.contains("omega")) s.omega = j["omega"].get<double>();
  if (j.contains("switch_radius")) s.switch_radius = j["switch_radius"].get<double>();
  if (j.contains("opt_tol")) s.opt_tol = j["opt_tol"].get<double>();
  if (j.contains("newton_tol")) s.newton_tol = j["newton_tol"].get<double>();
  if (j.contains("max_correctors")) s.max_correctors = j["max_correctors"].get<int>();
  if (j.contains("max_iter")) s.max_iter = j["max_iter"].get<int>();
  if (j.contains("ssadmm_delta")) s.ssadmm_delta = j["ssadmm_delta"].get<double>();
  if (j.contains("ladmm_mu")) s.ladmm_mu = j["ladmm_mu"].get<double>();
  if (j.contains("rng_seed")) s.rng_seed = j["rng_seed"].get<std::uint64_t>();
  s.stop_tol_primal = tol_field(j, "stop_tol_primal");
  s.stop_tol_dual = tol_field(j, "stop_tol_dual");
  if (j.contains("exact_solve_uses_stale_params"))
    s.exact_solve_uses_stale_params = j["exact_solve_uses_stale_params"].get<bool>();
  if (j.contains("deterministic_timing"))
    s.deterministic_timing = j["deterministic_timing"].get<bool>();
  if (j.contains("keep_states")) s.keep_states = j["keep_states"].get<bool>();
  return s;
}

ModelSpec parse_model(const Json& j) {
  reject_unknown(j, "model", {"kind", "input_dim", "hidden", "outputs", "basis"});
  ModelSpec m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear_features") m.kind = ModelKind::linear_features;
  else if (kind == "mlp_regressor") m.kind = ModelKind::mlp_regressor;
  else if (kind == "softmax_classifier") m.kind = ModelKind::softmax_classifier;
  else throw ConfigError("config: unknown model kind '" + kind + "'");
  m.input_dim = j.at("input_dim").get<int>();
  if (j.contains("hidden")) m.hidden = j["hidden"].get<int>();
  if (j.contains("outputs")) m.outputs = j["outputs"].get<int>();
  if (j.contains("basis")) {
    const std::string b = j["basis"].get<std::string>();
    if (b == "raw") m.basis = Basis::raw;
    else if (b == "affine") m.basis = Basis::affine;
    else throw ConfigError("config: unknown basis '" + b + "'");
  }
  if (m.input_dim < 1) throw ConfigError("config: model.input_dim must be >= 1");
  if (m.kind != ModelKind::linear_features && m.hidden < 1)
    throw ConfigError("config: model.hidden must be >= 1");
  if (m.outputs < 1) throw ConfigError("config: model.outputs must be >= 1");
  return m;
}

DatasetConfig parse_dataset(const Json& j) {
  reject_unknown(j, "dataset",
                 {"kind", "path", "label_cols", "classification", "rows", "features", "classes",
                  "seed", "noise_std", "normalize", "shard_policy"});
  DatasetConfig d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "csv") d.kind = DatasetKind::csv;
  else if (kind == "synthetic_regression") d.kind = DatasetKind::synthetic_regression;
  else if (kind == "synthetic_classification") d.kind = DatasetKind::synthetic_classification;
  else throw ConfigError("config: unknown dataset kind '" + kind + "'");
  if (j.contains("path")) d.path = j["path"].get<std::string>();
  if (j.contains("label_cols")) d.label_cols = j["label_cols"].get<int>();
  if (j.contains("classification")) d.classification = j["classification"].get<bool>();
  if (j.contains("rows")) d.rows = j["rows"].get<int>();
  if (j.contains("features")) d.features = j["features"].get<int>();
  if (j.contains("classes")) d.classes = j["classes"].get<int>();
  if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("noise_std")) d.noise_std = j["noise_std"].get<double>();
  if (j.contains("normalize")) {
    const std::string n = j["normalize"].get<std::string>();
    if (n == "features_and_labels") d.normalize = NormalizePolicy::features_and_labels;
    else if (n == "features_only") d.normalize = NormalizePolicy::features_only;
    else if (n == "none") d.normalize = NormalizePolicy::none;
    else throw ConfigError("config: unknown normalize policy '" + n + "'");
  }
  if (j.contains("shard_policy")) {
    const std::string p = j["shard_policy"].get<std::string>();
    if (p == "contiguous") d.shard_policy = ShardPolicy::contiguous;
    else if (p == "round_robin") d.shard_policy = ShardPolicy::round_robin;
    else throw ConfigError("config: unknown shard policy '" + p + "'");
  }
  if (d.kind == DatasetKind::csv && d.path.empty())
    throw ConfigError("config: dataset.path required for csv datasets");
  return d;
}

TransportConfig parse_transport(const Json& j) {
  reject_unknown(j, "transport", {"kind", "listen"});
  TransportConfig t;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "loopback") t.kind = TransportKind::loopback;
  else if (kind == "tcp") t.kind = TransportKind::tcp;
  else throw ConfigError("config: unknown transport kind '" + kind + "'");
  if (j.contains("listen")) t.listen = j["listen"].get<std::string>();
  return t;
}

OutputConfig parse_output(const Json& j) {
  reject_unknown(j, "output", {"dir", "metrics"});
  OutputConfig o;
  if (j.contains("dir")) o.dir = j["dir"].get<std::string>();
  if (j.contains("metrics")) o.metrics = j["metrics"].get<std::string>();
  return o;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    reject_unknown(j, "",
                   {"schema_version", "solver", "model", "dataset", "transport", "output"});
    RunConfig cfg;
    cfg.schema_version = j.at("schema_version").get<int>();
    if (cfg.schema_version != 1)
      throw ConfigError("config: unsupported schema_version " +
                        std::to_string(cfg.schema_version));
    if (j.contains("solver")) cfg.solver = parse_solver(j["solver"]);
    cfg.model = parse_model(j.at("model"));
    if (j.contains("dataset")) cfg.dataset = parse_dataset(j["dataset"]);
    if (j.contains("transport")) cfg.transport = parse_transport(j["transport"]);
    if (j.contains("output")) cfg.output = parse_output(j["output"]);
    validate(cfg.solver);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  Json j;
  j["schema_version"] = cfg.schema_version;

  Json s;
  s["mode"] = to_string(cfg.solver.mode);
  s["n_workers"] = cfg.solver.n_workers;
  s["rho"] = cfg.solver.rho;
  s["reg"] = to_string(cfg.solver.reg);
  s["omega"] = cfg.solver.omega;
  s["switch_radius"] = cfg.solver.switch_radius;
  s["opt_tol"] = cfg.solver.opt_tol;
  s["newton_tol"] = cfg.solver.newton_tol;
  s["max_correctors"] = cfg.solver.max_correctors;
  s["max_iter"] = cfg.solver.max_iter;
  s["ssadmm_delta"] = cfg.solver.ssadmm_delta;
  s["ladmm_mu"] = cfg.solver.ladmm_mu;
  s["rng_seed"] = cfg.solver.rng_seed;
  s["stop_tol_primal"] = tol_json(cfg.solver.stop_tol_primal);
  s["stop_tol_dual"] = tol_json(cfg.solver.stop_tol_dual);
  s["exact_solve_uses_stale_params"] = cfg.solver.exact_solve_uses_stale_params;
  s["deterministic_timing"] = cfg.solver.deterministic_timing;
  s["keep_states"] = cfg.solver.keep_states;
  j["solver"] = std::move(s);

  Json m;
  switch (cfg.model.kind) {
    case ModelKind::linear_features: m["kind"] = "linear_features"; break;
    case ModelKind::mlp_regressor: m["kind"] = "mlp_regressor"; break;
    case ModelKind::softmax_classifier: m["kind"] = "softmax_classifier"; break;
  }
  m["input_dim"] = cfg.model.input_dim;
  m["hidden"] = cfg.model.hidden;
  m["outputs"] = cfg.model.outputs;
  m["basis"] = cfg.model.basis == Basis::raw ? "raw" : "affine";
  j["model"] = std::move(m);

  Json d;
  switch (cfg.dataset.kind) {
    case DatasetKind::csv: d["kind"] = "csv"; break;
    case DatasetKind::synthetic_regression: d["kind"] = "synthetic_regression"; break;
    case DatasetKind::synthetic_classification: d["kind"] = "synthetic_classification"; break;
  }
  d["path"] = cfg.dataset.path;
  d["label_cols"] = cfg.dataset.label_cols;
  d["classification"] = cfg.dataset.classification;
  d["rows"] = cfg.dataset.rows;
  d["features"] = cfg.dataset.features;
  d["classes"] = cfg.dataset.classes;
  d["seed"] = cfg.dataset.seed;
  d["noise_std"] = cfg.dataset.noise_std;
  switch (cfg.dataset.normalize) {
    case NormalizePolicy::features_and_labels: d["normalize"] = "features_and_labels"; break;
    case NormalizePolicy::features_only: d["normalize"] = "features_only"; break;
    case NormalizePolicy::none: d["normalize"] = "none"; break;
  }
  d["shard_policy"] =
      cfg.dataset.shard_policy == ShardPolicy::contiguous ? "contiguous" : "round_robin";
  j["dataset"] = std::move(d);

  Json t;
  t["kind"] = cfg.transport.kind == TransportKind::loopback ? "loopback" : "tcp";
  t["listen"] = cfg.transport.listen;
  j["transport"] = std::move(t);

  Json o;
  o["dir"] = cfg.output.dir;
  o["metrics"] = cfg.output.metrics;
  j["output"] = std::move(o);

  return j.dump(2) + "\n";
}

}  // namespace sadmm
