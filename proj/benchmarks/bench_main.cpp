#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "sadmm/consensus.hpp"
#include "sadmm/model.hpp"
#include "sadmm/subproblem.hpp"
#include "sadmm/wire.hpp"

namespace {

using namespace sadmm;

// one worker's slice of a regression problem, as in the consensus runs
struct Fixture {
  ModelSpec spec{ModelKind::mlp_regressor, 4, 5, 1, Basis::raw};
  Shard shard;
  ObjectivePtr objective;
  Vector x_start;
  ParamBlock p0, p1;

  Fixture() {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss(0.0, 1.0);
    shard.features.resize(250, spec.input_dim);
    for (Eigen::Index i = 0; i < shard.features.size(); ++i)
      shard.features.data()[i] = gauss(rng);
    shard.labels.resize(250, 1);
    for (Eigen::Index i = 0; i < shard.labels.size(); ++i)
      shard.labels.data()[i] = gauss(rng);
    objective = std::make_shared<ModelObjective>(spec, shard);
    const int n = param_count(spec);
    x_start = initial_iterate(3, n);
    p0 = {x_start, Vector::Zero(n)};
    p1 = p0;
    p1.x0.array() += 0.05;
    p1.lambda.array() += 0.01;
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_ExactSolve(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    SubproblemEngine engine(f.objective, 2.0, {});
    engine.set_initial(f.x_start);
    benchmark::DoNotOptimize(engine.solve_exact(f.p0));
  }
}
BENCHMARK(BM_ExactSolve)->Unit(benchmark::kMillisecond);

void BM_TangentialPredictor(benchmark::State& state) {
  const Fixture& f = fixture();
  SubproblemEngine engine(f.objective, 2.0, {});
  engine.set_initial(f.x_start);
  engine.solve_exact(f.p0);
  for (auto _ : state) benchmark::DoNotOptimize(engine.tangential_predict(f.p1));
}
BENCHMARK(BM_TangentialPredictor)->Unit(benchmark::kMillisecond);

void BM_PreparedPredictor(benchmark::State& state) {
  const Fixture& f = fixture();
  SubproblemEngine engine(f.objective, 2.0, {});
  engine.set_initial(f.x_start);
  engine.solve_exact(f.p0);
  engine.prepare();
  for (auto _ : state) benchmark::DoNotOptimize(engine.tangential_predict(f.p1));
}
BENCHMARK(BM_PreparedPredictor)->Unit(benchmark::kMicrosecond);

void BM_CorrectorStep(benchmark::State& state) {
  const Fixture& f = fixture();
  SubproblemEngine engine(f.objective, 2.0, {});
  engine.set_initial(f.x_start);
  engine.solve_exact(f.p0);
  const Vector xt = engine.tangential_predict(f.p1);
  for (auto _ : state) benchmark::DoNotOptimize(engine.corrector_step(xt, f.p1));
}
BENCHMARK(BM_CorrectorStep)->Unit(benchmark::kMillisecond);

void BM_WireRoundtrip(benchmark::State& state) {
  const Fixture& f = fixture();
  RoundParamsMsg msg;
  msg.k = 17;
  msg.directive = Directive::sensitivity;
  msg.x0 = f.p0.x0;
  msg.lambda = f.p0.lambda;
  for (auto _ : state) {
    const auto frame = encode(msg);
    benchmark::DoNotOptimize(decode(frame));
  }
}
BENCHMARK(BM_WireRoundtrip);

}  // namespace
