#pragma once

#include <string>
#include <vector>

#include "sadmm/config.hpp"
#include "sadmm/model.hpp"
#include "sadmm/trace.hpp"

namespace sadmm {

struct RawDataset {
  Matrix features;
  Matrix labels;            // regression targets
  Eigen::VectorXi classes;  // classification targets
  bool classification = false;
  std::vector<std::string> class_dictionary;  // id -> label text, first-appearance order
  Eigen::Index rows() const { return features.rows(); }
};

struct CsvSchema {
  int label_cols = 1;  // trailing columns holding the targets
  bool classification = false;
  // when non-empty, class labels must come from this list (e.g. held-out data)
  std::vector<std::string> class_dictionary;
};

// Comma-separated numeric file, one sample per row, targets in the trailing
// columns. A leading header row is detected (non-numeric feature cell) and
// skipped. Throws IoError on ragged rows, non-numeric feature cells, or
// unknown class labels under a pinned dictionary.
RawDataset load_csv(const std::string& path, const CsvSchema& schema);

struct NormalizationStats {
  Vector feature_mean, feature_std;  // sample std, M-1 divisor
  Vector label_mean, label_std;
  bool labels_normalized = false;
  std::vector<bool> constant_features;  // flagged and passed through untouched
  std::vector<bool> constant_labels;
};

// Column-wise standardization applied before sharding. Classification class
// ids are never touched; regression labels are included by default.
NormalizationStats normalize(RawDataset& ds, NormalizePolicy policy);

// contiguous: shard sizes differ by at most one (leading shards take the
// remainder); round_robin: row j lands in shard j mod N
std::vector<Shard> shard_split(const RawDataset& ds, int n_shards, ShardPolicy policy);

// header: k,r_norm,s_norm,aug_lagrangian,eps_max,nlp_solves,linear_solves,
// max_worker_wall_time_s,mode -- reals printed with 17 significant digits so
// a reload reproduces the doubles bitwise
void write_metrics(const RunTrace& trace, const std::string& path);
std::vector<IterationRecord> read_metrics(const std::string& path);

// Seeded generators standing in for the benchmark datasets: a small sigmoid
// network teacher plus Gaussian label noise (regression) or argmax labels
// (classification). Deterministic per seed.
RawDataset synthetic_regression(int rows, int features, std::uint64_t seed, double noise_std);
RawDataset synthetic_classification(int rows, int features, int classes, std::uint64_t seed);

struct PreparedData {
  std::vector<Shard> shards;
  NormalizationStats stats;
  RawDataset data;  // post-normalization, for whole-set evaluation
};

// load or generate per the config, normalize, then shard for n_workers
PreparedData prepare_dataset(const DatasetConfig& cfg, const ModelSpec& spec, int n_workers);

// mean squared error of the model on a dataset, plus 1 - MSE/Var(y)
struct FitQuality {
  double mse = 0.0;
  double r_squared = 0.0;
};
FitQuality evaluate_fit(const ModelSpec& spec, const Vector& x, const RawDataset& ds);

}  // namespace sadmm
