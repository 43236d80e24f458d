#include "sadmm/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace sadmm {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

}  // namespace

RawDataset load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.label_cols < 1) throw ConfigError("load_csv: label_cols must be >= 1");
  if (schema.classification && schema.label_cols != 1)
    throw ConfigError("load_csv: classification expects a single label column");
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    rows.push_back(split_row(line));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw IoError("load_csv: row " + std::to_string(lineno) + " has " +
                    std::to_string(rows.back().size()) + " cells, expected " +
                    std::to_string(rows.front().size()));
  }
  if (rows.empty()) throw IoError("load_csv: '" + path + "' holds no data");

  const int total_cols = static_cast<int>(rows.front().size());
  const int feat_cols = total_cols - schema.label_cols;
  if (feat_cols < 1)
    throw ConfigError("load_csv: " + std::to_string(total_cols) + " columns cannot hold " +
                      std::to_string(schema.label_cols) + " label columns plus features");

  // a header is any first row whose feature cells do not all parse as numbers
  std::size_t first = 0;
  {
    double v;
    bool numeric = true;
    for (int c = 0; c < feat_cols && numeric; ++c) numeric = parse_double(rows[0][c], &v);
    if (!numeric) first = 1;
    if (first == rows.size()) throw IoError("load_csv: only a header row present");
  }

  const Eigen::Index m = static_cast<Eigen::Index>(rows.size() - first);
  RawDataset ds;
  ds.classification = schema.classification;
  ds.features.resize(m, feat_cols);
  if (schema.classification) {
    ds.classes.resize(m);
    ds.class_dictionary = schema.class_dictionary;
  } else {
    ds.labels.resize(m, schema.label_cols);
  }

  const bool pinned = !schema.class_dictionary.empty();
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& cells = rows[first + r];
    for (int c = 0; c < feat_cols; ++c) {
      double v;
      if (!parse_double(cells[c], &v))
        throw IoError("load_csv: non-numeric feature cell '" + cells[c] + "' at row " +
                      std::to_string(first + r + 1));
      ds.features(r, c) = v;
    }
    if (schema.classification) {
      const std::string& tok = cells[feat_cols];
      auto it = std::find(ds.class_dictionary.begin(), ds.class_dictionary.end(), tok);
      if (it == ds.class_dictionary.end()) {
        if (pinned)
          throw IoError("load_csv: unknown class label '" + tok + "' at row " +
                        std::to_string(first + r + 1));
        ds.class_dictionary.push_back(tok);
        it = std::prev(ds.class_dictionary.end());
      }
      ds.classes[r] = static_cast<int>(it - ds.class_dictionary.begin());
    } else {
      for (int c = 0; c < schema.label_cols; ++c) {
        double v;
        if (!parse_double(cells[feat_cols + c], &v))
          throw IoError("load_csv: non-numeric label cell '" + cells[feat_cols + c] +
                        "' at row " + std::to_string(first + r + 1));
        ds.labels(r, c) = v;
      }
    }
  }
  return ds;
}

namespace {

// standardizes columns in place; returns (mean, std, constant flags)
void standardize(Matrix& m, Vector& mean, Vector& stdev, std::vector<bool>& constant) {
  const double rows = static_cast<double>(m.rows());
  mean = m.colwise().mean();
  stdev.resize(m.cols());
  constant.assign(m.cols(), false);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double ss = (m.col(c).array() - mean[c]).square().sum();
    stdev[c] = rows > 1 ? std::sqrt(ss / (rows - 1.0)) : 0.0;
    if (stdev[c] == 0.0) {
      constant[c] = true;  // passthrough, including the mean
      continue;
    }
    m.col(c) = (m.col(c).array() - mean[c]) / stdev[c];
  }
}

}  // namespace

NormalizationStats normalize(RawDataset& ds, NormalizePolicy policy) {
  NormalizationStats st;
  if (policy == NormalizePolicy::none) {
    st.feature_mean = Vector::Zero(ds.features.cols());
    st.feature_std = Vector::Ones(ds.features.cols());
    st.constant_features.assign(ds.features.cols(), false);
    return st;
  }
  standardize(ds.features, st.feature_mean, st.feature_std, st.constant_features);
  if (policy == NormalizePolicy::features_and_labels && !ds.classification &&
      ds.labels.size() > 0) {
    standardize(ds.labels, st.label_mean, st.label_std, st.constant_labels);
    st.labels_normalized = true;
  }
  return st;
}

std::vector<Shard> shard_split(const RawDataset& ds, int n_shards, ShardPolicy policy) {
  if (n_shards < 1) throw ConfigError("shard_split: need at least one shard");
  const Eigen::Index m = ds.rows();
  if (m < n_shards)
    throw ConfigError("shard_split: " + std::to_string(m) + " rows cannot fill " +
                      std::to_string(n_shards) + " shards");

  std::vector<std::vector<Eigen::Index>> idx(n_shards);
  if (policy == ShardPolicy::contiguous) {
    const Eigen::Index base = m / n_shards;
    const Eigen::Index extra = m % n_shards;
    Eigen::Index at = 0;
    for (int s = 0; s < n_shards; ++s) {
      const Eigen::Index take = base + (s < extra ? 1 : 0);
      for (Eigen::Index j = 0; j < take; ++j) idx[s].push_back(at++);
    }
  } else {
    for (Eigen::Index j = 0; j < m; ++j) idx[j % n_shards].push_back(j);
  }

  std::vector<Shard> shards(n_shards);
  for (int s = 0; s < n_shards; ++s) {
    Shard& sh = shards[s];
    const auto rows = static_cast<Eigen::Index>(idx[s].size());
    sh.features.resize(rows, ds.features.cols());
    if (ds.classification)
      sh.classes.resize(rows);
    else
      sh.labels.resize(rows, ds.labels.cols());
    for (Eigen::Index j = 0; j < rows; ++j) {
      sh.features.row(j) = ds.features.row(idx[s][j]);
      if (ds.classification)
        sh.classes[j] = ds.classes[idx[s][j]];
      else
        sh.labels.row(j) = ds.labels.row(idx[s][j]);
    }
  }
  return shards;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_metrics: cannot open '" + path + "'");
  out << "k,r_norm,s_norm,aug_lagrangian,eps_max,nlp_solves,linear_solves,"
         "max_worker_wall_time_s,mode\n";
  for (const auto& rec : trace.records) {
    out << rec.k << ',' << fmt17(rec.r_norm) << ',' << fmt17(rec.s_norm) << ','
        << fmt17(rec.aug_lagrangian) << ',' << fmt17(rec.eps_max) << ',' << rec.nlp_solves << ','
        << rec.linear_solves << ',' << fmt17(rec.max_worker_wall_time_s) << ',' << rec.mode
        << '\n';
  }
  if (!out) throw IoError("write_metrics: write to '" + path + "' failed");
}

std::vector<IterationRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_metrics: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("read_metrics: empty file");
  std::vector<IterationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 9) throw IoError("read_metrics: malformed row '" + line + "'");
    IterationRecord r;
    double v;
    r.k = std::atoi(cells[0].c_str());
    if (!parse_double(cells[1], &v)) throw IoError("read_metrics: bad r_norm");
    r.r_norm = v;
    if (!parse_double(cells[2], &v)) throw IoError("read_metrics: bad s_norm");
    r.s_norm = v;
    if (!parse_double(cells[3], &v)) throw IoError("read_metrics: bad aug_lagrangian");
    r.aug_lagrangian = v;
    if (!parse_double(cells[4], &v)) throw IoError("read_metrics: bad eps_max");
    r.eps_max = v;
    r.nlp_solves = std::atoi(cells[5].c_str());
    r.linear_solves = std::atoi(cells[6].c_str());
    if (!parse_double(cells[7], &v)) throw IoError("read_metrics: bad wall time");
    r.max_worker_wall_time_s = v;
    r.mode = cells[8];
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

// fixed-architecture sigmoid-network teacher used by both generators
struct Teacher {
  Matrix w0;
  Vector b0;
  Matrix w1;
  Vector b1;

  Teacher(int features, int hidden, int outputs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    w0.resize(hidden, features);
    b0.resize(hidden);
    w1.resize(outputs, hidden);
    b1.resize(outputs);
    for (Eigen::Index i = 0; i < w0.size(); ++i) w0.data()[i] = 1.5 * u(rng);
    for (Eigen::Index i = 0; i < b0.size(); ++i) b0[i] = 0.5 * u(rng);
    for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = 2.0 * u(rng);
    for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = 0.5 * u(rng);
  }

  Matrix operator()(const Matrix& u) const {
    Matrix z = (u * w0.transpose()).rowwise() + b0.transpose();
    z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return (z * w1.transpose()).rowwise() + b1.transpose();
  }
};

}  // namespace

RawDataset synthetic_regression(int rows, int features, std::uint64_t seed, double noise_std) {
  if (rows < 1 || features < 1) throw ConfigError("synthetic_regression: bad shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RawDataset ds;
  ds.features.resize(rows, features);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = gauss(rng);
  const Teacher teacher(features, 5, 1, rng);
  ds.labels = teacher(ds.features);
  for (Eigen::Index r = 0; r < rows; ++r) ds.labels(r, 0) += noise_std * gauss(rng);
  return ds;
}

RawDataset synthetic_classification(int rows, int features, int classes, std::uint64_t seed) {
  if (rows < 1 || features < 1 || classes < 2)
    throw ConfigError("synthetic_classification: bad shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RawDataset ds;
  ds.classification = true;
  ds.features.resize(rows, features);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = gauss(rng);
  const Teacher teacher(features, 5, classes, rng);
  const Matrix logits = teacher(ds.features);
  ds.classes.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index arg;
    logits.row(r).maxCoeff(&arg);
    ds.classes[r] = static_cast<int>(arg);
  }
  ds.class_dictionary.resize(classes);
  for (int c = 0; c < classes; ++c) ds.class_dictionary[c] = "class_" + std::to_string(c);
  return ds;
}

PreparedData prepare_dataset(const DatasetConfig& cfg, const ModelSpec& spec, int n_workers) {
  PreparedData out;
  switch (cfg.kind) {
    case DatasetKind::csv: {
      CsvSchema schema;
      schema.label_cols = cfg.label_cols;
      schema.classification = cfg.classification;
      out.data = load_csv(cfg.path, schema);
      break;
    }
    case DatasetKind::synthetic_regression:
      out.data = synthetic_regression(cfg.rows, cfg.features, cfg.seed, cfg.noise_std);
      break;
    case DatasetKind::synthetic_classification:
      out.data = synthetic_classification(cfg.rows, cfg.features, cfg.classes, cfg.seed);
      break;
  }

  if (out.data.features.cols() != spec.input_dim)
    throw ConfigError("prepare_dataset: dataset has " +
                      std::to_string(out.data.features.cols()) + " features, model wants " +
                      std::to_string(spec.input_dim));
  if (spec.kind == ModelKind::softmax_classifier) {
    if (!out.data.classification)
      throw ConfigError("prepare_dataset: classifier model on a regression dataset");
    if (static_cast<int>(out.data.class_dictionary.size()) > spec.outputs)
      throw ConfigError("prepare_dataset: dataset has more classes than the model");
  } else {
    if (out.data.classification)
      throw ConfigError("prepare_dataset: regression model on a classification dataset");
    if (out.data.labels.cols() != spec.outputs)
      throw ConfigError("prepare_dataset: label columns mismatch model outputs");
  }

  out.stats = normalize(out.data, cfg.normalize);
  out.shards = shard_split(out.data, n_workers, cfg.shard_policy);
  return out;
}

FitQuality evaluate_fit(const ModelSpec& spec, const Vector& x, const RawDataset& ds) {
  if (ds.classification) throw ConfigError("evaluate_fit: regression datasets only");
  Shard whole;
  whole.features = ds.features;
  whole.labels = ds.labels;
  FitQuality q;
  q.mse = loss(spec, x, whole).value;
  const double mean = ds.labels.col(0).mean();
  const double var =
      (ds.labels.col(0).array() - mean).square().sum() / static_cast<double>(ds.rows());
  q.r_squared = var > 0.0 ? 1.0 - q.mse / var : 0.0;
  return q;
}

}  // namespace sadmm
