#pragma once

#include <cstdint>
#include <memory>

#include "sadmm/linalg.hpp"
#include "sadmm/objective.hpp"

namespace sadmm {

enum class ModelKind : std::uint8_t {
  linear_features = 0,
  mlp_regressor = 1,
  softmax_classifier = 2,
};

// feature map for linear_features
enum class Basis : std::uint8_t {
  raw = 0,     // phi(u) = u
  affine = 1,  // phi(u) = (1, u)
};

struct ModelSpec {
  ModelKind kind = ModelKind::linear_features;
  int input_dim = 0;
  int hidden = 0;   // hidden neurons (mlp_regressor, softmax_classifier)
  int outputs = 1;  // output dim (regressor) or class count (classifier)
  Basis basis = Basis::raw;
};

// number of packed parameters n for a spec
int param_count(const ModelSpec& spec);

// One worker's slice of the data. Regression labels live in `labels`
// (rows x outputs); classification labels are row class indices.
struct Shard {
  Matrix features;          // rows x input_dim
  Matrix labels;            // rows x label_cols, regression targets
  Eigen::VectorXi classes;  // rows, class ids, classification only
  Eigen::Index rows() const { return features.rows(); }
};

struct LossValue {
  double value = 0.0;
  bool log_clamped = false;  // cross-entropy hit the 1e-300 probability floor
};

// The MLP parameter vector is packed as: W0 row-major (hidden x input_dim),
// b0, W1 row-major (outputs x hidden), b1. linear_features is the raw
// coefficient vector on phi(u).
Vector predict(const ModelSpec& spec, const Vector& x, const Vector& u);

// mean loss over the shard: squared error for the regressors,
// cross-entropy (natural log, probabilities clamped at 1e-300) for the classifier
LossValue loss(const ModelSpec& spec, const Vector& x, const Shard& shard);

// analytic gradient of loss() in x
Vector grad(const ModelSpec& spec, const Vector& x, const Shard& shard);

// Hessian of loss(): exact for linear_features; otherwise central finite
// differences of the analytic gradient, symmetrized as 0.5*(H + H^T).
SymMatrix hessian(const ModelSpec& spec, const Vector& x, const Shard& shard);

// Objective adapter over (spec, shard)
class ModelObjective final : public Objective {
 public:
  ModelObjective(ModelSpec spec, Shard shard);

  Eigen::Index dim() const override { return n_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  SymMatrix hessian(const Vector& x) const override;

  const ModelSpec& spec() const { return spec_; }
  const Shard& shard() const { return shard_; }

 private:
  ModelSpec spec_;
  Shard shard_;
  Eigen::Index n_;
};

// central finite-difference gradient of a scalar function,
// step 1e-6*(1+|x_k|) per coordinate
template <class F>
Vector fd_gradient(F&& f, const Vector& x) {
  Vector g(x.size());
  Vector xe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    xe[k] = x[k] + h;
    const double fp = f(xe);
    xe[k] = x[k] - h;
    const double fm = f(xe);
    xe[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace sadmm
