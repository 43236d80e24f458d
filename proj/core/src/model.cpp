#include "sadmm/model.hpp"

#include <cmath>
#include <string>

namespace sadmm {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Vector>;

struct MlpDims {
  int m, q, out;
  int w0_off, b0_off, w1_off, b1_off, total;
};

MlpDims mlp_dims(const ModelSpec& s) {
  MlpDims d;
  d.m = s.input_dim;
  d.q = s.hidden;
  d.out = s.outputs;
  d.w0_off = 0;
  d.b0_off = d.q * d.m;
  d.w1_off = d.b0_off + d.q;
  d.b1_off = d.w1_off + d.out * d.q;
  d.total = d.b1_off + d.out;
  return d;
}

void check_params(const ModelSpec& spec, const Vector& x) {
  if (x.size() != param_count(spec))
    throw ConfigError("model: parameter vector has " + std::to_string(x.size()) +
                      " entries, spec wants " + std::to_string(param_count(spec)));
  if (!x.allFinite()) throw NumericalError("model: non-finite parameters");
}

void check_shard(const ModelSpec& spec, const Shard& shard) {
  if (shard.features.cols() != spec.input_dim)
    throw ConfigError("model: shard has " + std::to_string(shard.features.cols()) +
                      " feature columns, spec wants " + std::to_string(spec.input_dim));
  if (shard.rows() == 0) throw ConfigError("model: empty shard");
  if (!shard.features.allFinite()) throw NumericalError("model: non-finite features");
  if (spec.kind == ModelKind::softmax_classifier) {
    if (shard.classes.size() != shard.rows())
      throw ConfigError("model: class labels missing or wrong length");
    for (Eigen::Index j = 0; j < shard.classes.size(); ++j)
      if (shard.classes[j] < 0 || shard.classes[j] >= spec.outputs)
        throw ConfigError("model: class id " + std::to_string(shard.classes[j]) +
                          " outside [0, " + std::to_string(spec.outputs) + ")");
  } else {
    if (shard.labels.rows() != shard.rows() || shard.labels.cols() != spec.outputs)
      throw ConfigError("model: label block mismatches spec outputs");
    if (!shard.labels.allFinite()) throw NumericalError("model: non-finite labels");
  }
}

// basis expansion, one row per sample
Matrix feature_map(const ModelSpec& spec, const Matrix& u) {
  if (spec.basis == Basis::raw) return u;
  Matrix phi(u.rows(), u.cols() + 1);
  phi.col(0).setOnes();
  phi.rightCols(u.cols()) = u;
  return phi;
}

Matrix sigmoid(const Matrix& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// rowwise softmax, max-shifted
Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const double mx = logits.row(j).maxCoeff();
    p.row(j) = (logits.row(j).array() - mx).exp();
    p.row(j) /= p.row(j).sum();
  }
  return p;
}

struct Forward {
  Matrix a;     // hidden activations, rows x q
  Matrix out;   // network output, rows x outputs (logits for the classifier)
};

Forward mlp_forward(const MlpDims& d, const Vector& x, const Matrix& u) {
  ConstMatMap w0(x.data() + d.w0_off, d.q, d.m);
  ConstVecMap b0(x.data() + d.b0_off, d.q);
  ConstMatMap w1(x.data() + d.w1_off, d.out, d.q);
  ConstVecMap b1(x.data() + d.b1_off, d.out);
  Forward f;
  f.a = sigmoid((u * w0.transpose()).rowwise() + b0.transpose());
  f.out = (f.a * w1.transpose()).rowwise() + b1.transpose();
  return f;
}

// packs layer gradients in parameter order; dOut is dLoss/dOut, rows x out
Vector mlp_backward(const MlpDims& d, const Vector& x, const Matrix& u,
                    const Forward& f, const Matrix& d_out) {
  ConstMatMap w1(x.data() + d.w1_off, d.out, d.q);
  const Matrix d_a = d_out * w1;
  const Matrix d_z = d_a.array() * f.a.array() * (1.0 - f.a.array());

  Vector g(d.total);
  Eigen::Map<RowMat>(g.data() + d.w0_off, d.q, d.m) = d_z.transpose() * u;
  Eigen::Map<Vector>(g.data() + d.b0_off, d.q) = d_z.colwise().sum();
  Eigen::Map<RowMat>(g.data() + d.w1_off, d.out, d.q) = d_out.transpose() * f.a;
  Eigen::Map<Vector>(g.data() + d.b1_off, d.out) = d_out.colwise().sum();
  return g;
}

Matrix one_hot(const Eigen::VectorXi& classes, int n_classes) {
  Matrix h = Matrix::Zero(classes.size(), n_classes);
  for (Eigen::Index j = 0; j < classes.size(); ++j) h(j, classes[j]) = 1.0;
  return h;
}

}  // namespace

int param_count(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::linear_features:
      return spec.basis == Basis::affine ? spec.input_dim + 1 : spec.input_dim;
    case ModelKind::mlp_regressor:
    case ModelKind::softmax_classifier:
      return mlp_dims(spec).total;
  }
  throw ConfigError("model: unknown kind");
}

Vector predict(const ModelSpec& spec, const Vector& x, const Vector& u) {
  check_params(spec, x);
  if (u.size() != spec.input_dim) throw ConfigError("model: input dim mismatch");
  const Matrix row = u.transpose();
  switch (spec.kind) {
    case ModelKind::linear_features: {
      const Matrix phi = feature_map(spec, row);
      Vector y(1);
      y[0] = (phi * x)(0, 0);
      return y;
    }
    case ModelKind::mlp_regressor: {
      const Forward f = mlp_forward(mlp_dims(spec), x, row);
      return f.out.row(0).transpose();
    }
    case ModelKind::softmax_classifier: {
      const Forward f = mlp_forward(mlp_dims(spec), x, row);
      return softmax_rows(f.out).row(0).transpose();
    }
  }
  throw ConfigError("model: unknown kind");
}

LossValue loss(const ModelSpec& spec, const Vector& x, const Shard& shard) {
  check_params(spec, x);
  check_shard(spec, shard);
  const double m = static_cast<double>(shard.rows());
  LossValue out;
  switch (spec.kind) {
    case ModelKind::linear_features: {
      const Matrix phi = feature_map(spec, shard.features);
      out.value = (phi * x - shard.labels.col(0)).squaredNorm() / m;
      return out;
    }
    case ModelKind::mlp_regressor: {
      const Forward f = mlp_forward(mlp_dims(spec), x, shard.features);
      out.value = (f.out - shard.labels).squaredNorm() / m;
      return out;
    }
    case ModelKind::softmax_classifier: {
      const Forward f = mlp_forward(mlp_dims(spec), x, shard.features);
      const Matrix p = softmax_rows(f.out);
      double acc = 0.0;
      for (Eigen::Index j = 0; j < shard.rows(); ++j) {
        double pj = p(j, shard.classes[j]);
        if (pj < 1e-300) {
          pj = 1e-300;
          out.log_clamped = true;
        }
        acc -= std::log(pj);
      }
      out.value = acc / m;
      return out;
    }
  }
  throw ConfigError("model: unknown kind");
}

Vector grad(const ModelSpec& spec, const Vector& x, const Shard& shard) {
  check_params(spec, x);
  check_shard(spec, shard);
  const double m = static_cast<double>(shard.rows());
  switch (spec.kind) {
    case ModelKind::linear_features: {
      const Matrix phi = feature_map(spec, shard.features);
      return (2.0 / m) * (phi.transpose() * (phi * x - shard.labels.col(0)));
    }
    case ModelKind::mlp_regressor: {
      const MlpDims d = mlp_dims(spec);
      const Forward f = mlp_forward(d, x, shard.features);
      const Matrix d_out = (2.0 / m) * (f.out - shard.labels);
      return mlp_backward(d, x, shard.features, f, d_out);
    }
    case ModelKind::softmax_classifier: {
      const MlpDims d = mlp_dims(spec);
      const Forward f = mlp_forward(d, x, shard.features);
      const Matrix d_out = (softmax_rows(f.out) - one_hot(shard.classes, d.out)) / m;
      return mlp_backward(d, x, shard.features, f, d_out);
    }
  }
  throw ConfigError("model: unknown kind");
}

SymMatrix hessian(const ModelSpec& spec, const Vector& x, const Shard& shard) {
  check_params(spec, x);
  check_shard(spec, shard);
  if (spec.kind == ModelKind::linear_features) {
    const Matrix phi = feature_map(spec, shard.features);
    const double m = static_cast<double>(shard.rows());
    return SymMatrix::symmetrize((2.0 / m) * (phi.transpose() * phi));
  }
  // central differences of the analytic gradient
  const Eigen::Index n = x.size();
  Matrix h(n, n);
  Vector xe = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double step = 1e-5 * (1.0 + std::abs(x[k]));
    xe[k] = x[k] + step;
    const Vector gp = grad(spec, xe, shard);
    xe[k] = x[k] - step;
    const Vector gm = grad(spec, xe, shard);
    xe[k] = x[k];
    h.col(k) = (gp - gm) / (2.0 * step);
  }
  return SymMatrix::symmetrize(h);
}

ModelObjective::ModelObjective(ModelSpec spec, Shard shard)
    : spec_(spec), shard_(std::move(shard)), n_(param_count(spec)) {
  check_shard(spec_, shard_);
}

double ModelObjective::value(const Vector& x) const { return loss(spec_, x, shard_).value; }

Vector ModelObjective::gradient(const Vector& x) const { return grad(spec_, x, shard_); }

SymMatrix ModelObjective::hessian(const Vector& x) const {
  return sadmm::hessian(spec_, x, shard_);
}

QuadraticObjective::QuadraticObjective(SymMatrix h, Vector g, double c)
    : h_(std::move(h)), g_(std::move(g)), c_(c) {
  if (h_.size() != g_.size()) throw ConfigError("QuadraticObjective: dim mismatch");
}

double QuadraticObjective::value(const Vector& x) const {
  return 0.5 * x.dot(h_.mat() * x) + g_.dot(x) + c_;
}

Vector QuadraticObjective::gradient(const Vector& x) const { return h_.mat() * x + g_; }

SymMatrix QuadraticObjective::hessian(const Vector&) const { return h_; }

}  // namespace sadmm
