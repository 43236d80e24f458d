#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sadmm/errors.hpp"
#include "sadmm/model.hpp"

using namespace sadmm;

namespace {

// reference finite-difference gradient, written out here so the check does
// not share code with the library helper
Vector fd_reference(const ModelSpec& spec, const Vector& x, const Shard& shard) {
  Vector g(x.size());
  Vector xe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    xe[k] = x[k] + h;
    const double fp = loss(spec, xe, shard).value;
    xe[k] = x[k] - h;
    const double fm = loss(spec, xe, shard).value;
    xe[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Shard random_shard(const ModelSpec& spec, std::uint64_t seed, int rows) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Shard sh;
  sh.features.resize(rows, spec.input_dim);
  for (Eigen::Index i = 0; i < sh.features.size(); ++i) sh.features.data()[i] = gauss(rng);
  if (spec.kind == ModelKind::softmax_classifier) {
    std::uniform_int_distribution<int> cls(0, spec.outputs - 1);
    sh.classes.resize(rows);
    for (int r = 0; r < rows; ++r) sh.classes[r] = cls(rng);
  } else {
    sh.labels.resize(rows, spec.outputs);
    for (Eigen::Index i = 0; i < sh.labels.size(); ++i) sh.labels.data()[i] = gauss(rng);
  }
  return sh;
}

Vector random_params(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  Vector x(param_count(spec));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
  return x;
}

}  // namespace

TEST_CASE("param_count follows the packing layout") {
  CHECK(param_count({ModelKind::linear_features, 4, 0, 1, Basis::raw}) == 4);
  CHECK(param_count({ModelKind::linear_features, 4, 0, 1, Basis::affine}) == 5);
  // W0 (5x4) + b0 (5) + W1 (1x5) + b1 (1) = 31, the benchmark architecture
  CHECK(param_count({ModelKind::mlp_regressor, 4, 5, 1, Basis::raw}) == 31);
  CHECK(param_count({ModelKind::softmax_classifier, 4, 5, 4, Basis::raw}) == 49);
}

TEST_CASE("mlp prediction matches a hand-computed forward pass") {
  const ModelSpec spec{ModelKind::mlp_regressor, 2, 2, 1, Basis::raw};
  // packed as W0 row-major, b0, W1 row-major, b1
  Vector x(9);
  x << 1.0, 0.0,   // W0 row 0
      0.0, 1.0,    // W0 row 1
      0.0, 0.0,    // b0
      2.0, -1.0,   // W1
      0.5;         // b1
  Vector u(2);
  u << 0.3, -0.2;
  const double a0 = 1.0 / (1.0 + std::exp(-0.3));
  const double a1 = 1.0 / (1.0 + std::exp(0.2));
  const double expected = 2.0 * a0 - 1.0 * a1 + 0.5;
  const Vector out = predict(spec, x, u);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("linear feature loss is the mean squared error") {
  const ModelSpec spec{ModelKind::linear_features, 2, 0, 1, Basis::affine};
  Shard sh;
  sh.features.resize(2, 2);
  sh.features << 1.0, 2.0, -1.0, 0.5;
  sh.labels.resize(2, 1);
  sh.labels << 1.0, 2.0;
  Vector x(3);  // bias, then feature weights
  x << 0.5, 1.0, -1.0;
  const double p0 = 0.5 + 1.0 - 2.0;
  const double p1 = 0.5 - 1.0 - 0.5;
  const double expected = ((p0 - 1.0) * (p0 - 1.0) + (p1 - 2.0) * (p1 - 2.0)) / 2.0;
  CHECK(loss(spec, x, sh).value == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("cross entropy of uniform logits is log of the class count") {
  const ModelSpec spec{ModelKind::softmax_classifier, 3, 2, 4, Basis::raw};
  const Vector x = Vector::Zero(param_count(spec));  // all logits equal
  const Shard sh = random_shard(spec, 5, 50);
  CHECK(loss(spec, x, sh).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(loss(spec, x, sh).value == doctest::Approx(1.3862944).epsilon(1e-7));
}

TEST_CASE("analytic gradients agree with central differences for every model") {
  struct Case {
    const char* name;
    ModelSpec spec;
  };
  const Case cases[] = {
      {"linear raw", {ModelKind::linear_features, 4, 0, 1, Basis::raw}},
      {"linear affine", {ModelKind::linear_features, 4, 0, 1, Basis::affine}},
      {"linear two outputs", {ModelKind::linear_features, 3, 0, 2, Basis::raw}},
      {"mlp", {ModelKind::mlp_regressor, 4, 5, 1, Basis::raw}},
      {"softmax", {ModelKind::softmax_classifier, 4, 5, 4, Basis::raw}},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    for (int seed = 0; seed < 100; ++seed) {
      const Shard sh = random_shard(c.spec, 1000 + seed, 15);
      const Vector x = random_params(c.spec, 2000 + seed);
      const Vector g = grad(c.spec, x, sh);
      const Vector g_fd = fd_reference(c.spec, x, sh);
      REQUIRE((g - g_fd).norm() / (1.0 + g.norm()) <= 1e-5);
    }
  }
}

TEST_CASE("linear feature hessian equals the normal-equations matrix") {
  const ModelSpec spec{ModelKind::linear_features, 3, 0, 1, Basis::affine};
  const Shard sh = random_shard(spec, 77, 40);
  const int n = param_count(spec);
  // build phi explicitly: leading 1 then the raw features
  Matrix phi(sh.rows(), n);
  phi.col(0).setOnes();
  phi.rightCols(3) = sh.features;
  const Matrix expected = (2.0 / static_cast<double>(sh.rows())) * phi.transpose() * phi;
  const SymMatrix h = hessian(spec, random_params(spec, 78), sh);
  CHECK((h.mat() - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("finite difference hessian is symmetric and matches gradient slopes") {
  const ModelSpec spec{ModelKind::mlp_regressor, 3, 4, 1, Basis::raw};
  const Shard sh = random_shard(spec, 90, 25);
  const Vector x = random_params(spec, 91);
  const SymMatrix h = hessian(spec, x, sh);
  CHECK((h.mat() - h.mat().transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  // directional probe: H d should match (grad(x + t d) - grad(x - t d)) / 2t
  std::mt19937_64 rng(92);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector d(x.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = gauss(rng);
  d.normalize();
  const double t = 1e-5;
  const Vector slope = (grad(spec, x + t * d, sh) - grad(spec, x - t * d, sh)) / (2.0 * t);
  CHECK((h.mat() * d - slope).norm() <= 1e-4 * (1.0 + slope.norm()));
}

TEST_CASE("softmax probabilities stay in range on extreme logits") {
  const ModelSpec spec{ModelKind::softmax_classifier, 2, 2, 3, Basis::raw};
  Vector x = random_params(spec, 13);
  x.array() *= 400.0;  // drives logits far apart; must not overflow
  const Shard sh = random_shard(spec, 14, 10);
  const LossValue lv = loss(spec, x, sh);
  CHECK(std::isfinite(lv.value));
  CHECK(all_finite(grad(spec, x, sh)));
}

TEST_CASE("classifier rejects out-of-range class ids") {
  const ModelSpec spec{ModelKind::softmax_classifier, 2, 2, 3, Basis::raw};
  Shard sh = random_shard(spec, 15, 5);
  sh.classes[2] = 3;  // only classes 0..2 exist
  CHECK_THROWS_AS(loss(spec, random_params(spec, 16), sh), ConfigError);
}

TEST_CASE("dimension mismatches are reported as configuration errors") {
  const ModelSpec spec{ModelKind::mlp_regressor, 4, 5, 1, Basis::raw};
  const Shard sh = random_shard(spec, 17, 5);
  CHECK_THROWS_AS(loss(spec, Vector::Zero(7), sh), ConfigError);
  Shard wrong = sh;
  wrong.features.resize(5, 3);
  wrong.features.setZero();
  CHECK_THROWS_AS(loss(spec, Vector::Zero(param_count(spec)), wrong), ConfigError);
}

TEST_CASE("non-finite parameters are reported as numerical errors") {
  const ModelSpec spec{ModelKind::linear_features, 2, 0, 1, Basis::raw};
  const Shard sh = random_shard(spec, 18, 5);
  Vector x(2);
  x << 1.0, std::nan("");
  CHECK_THROWS_AS(loss(spec, x, sh), NumericalError);
}

TEST_CASE("objective adapter matches the free functions") {
  const ModelSpec spec{ModelKind::mlp_regressor, 3, 4, 1, Basis::raw};
  const Shard sh = random_shard(spec, 19, 20);
  const ModelObjective obj(spec, sh);
  const Vector x = random_params(spec, 20);
  CHECK(obj.dim() == param_count(spec));
  CHECK(obj.value(x) == loss(spec, x, sh).value);
  CHECK((obj.gradient(x) - grad(spec, x, sh)).norm() == 0.0);
}
