#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "sadmm/errors.hpp"
#include "sadmm/objective.hpp"
#include "sadmm/subproblem.hpp"

using namespace sadmm;

namespace {

// independent dense solver for the closed-form reference below
Vector gauss_jordan_solve(Matrix a, Vector b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    REQUIRE(std::abs(a(pivot, col)) > 1e-14);
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a(col, col);
    a.row(col) *= inv;
    b[col] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      b[r] -= f * b[col];
    }
  }
  return b;
}

// For J(x) = 0.5 x'Hx + g'x + c the augmented minimizer has the closed form
// (H + rho I) x = rho x0 - lambda - g. Solved here without touching solve_sym.
Vector quadratic_prox_reference(const Matrix& h, const Vector& g, const ParamBlock& p,
                                double rho) {
  const int n = static_cast<int>(g.size());
  Matrix a = h + rho * Matrix::Identity(n, n);
  Vector b = rho * p.x0 - p.lambda - g;
  return gauss_jordan_solve(std::move(a), std::move(b));
}

Matrix random_spd(int n, std::uint64_t seed, double diag_boost) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n * n; ++i) m.data()[i] = gauss(rng);
  return m * m.transpose() + diag_boost * Matrix::Identity(n, n);
}

Vector random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

ObjectivePtr make_quadratic(const Matrix& h, const Vector& g, double c = 0.0) {
  return std::make_shared<QuadraticObjective>(SymMatrix(h), g, c);
}

// strictly convex 1-d test objective with a state-dependent Hessian
struct Quartic final : Objective {
  Eigen::Index dim() const override { return 1; }
  double value(const Vector& x) const override {
    const double t = x[0];
    return 0.25 * t * t * t * t + 0.5 * t * t;
  }
  Vector gradient(const Vector& x) const override {
    const double t = x[0];
    Vector g(1);
    g[0] = t * t * t + t;
    return g;
  }
  SymMatrix hessian(const Vector& x) const override {
    const double t = x[0];
    Matrix h(1, 1);
    h(0, 0) = 3.0 * t * t + 1.0;
    return SymMatrix(h);
  }
};

Vector vec1(double t) {
  Vector v(1);
  v[0] = t;
  return v;
}

}  // namespace

TEST_CASE("augmented objective matches a hand-worked example") {
  // J(x) = 0.5 x^2, x = 2, x0 = 1, lambda = 0.5, rho = 2:
  // value = 2 + 0.5*1 + 1*1 = 3.5, gradient = 2 + 0.5 + 2*1 = 4.5
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  const auto obj = make_quadratic(h, Vector::Zero(1));
  const ParamBlock p{vec1(1.0), vec1(0.5)};
  CHECK(aug_value(*obj, vec1(2.0), p, 2.0) == doctest::Approx(3.5));
  CHECK(aug_grad(*obj, vec1(2.0), p, 2.0)[0] == doctest::Approx(4.5));
}

TEST_CASE("augmented objective rejects bad parameter blocks") {
  Matrix h(2, 2);
  h << 1.0, 0.0, 0.0, 1.0;
  const auto obj = make_quadratic(h, Vector::Zero(2));
  const Vector x = Vector::Zero(2);
  CHECK_THROWS_AS(aug_value(*obj, x, ParamBlock{Vector::Zero(3), Vector::Zero(2)}, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(aug_grad(*obj, x, ParamBlock{Vector::Zero(2), Vector::Zero(3)}, 1.0),
                  ConfigError);
  Vector bad = Vector::Zero(2);
  bad[0] = std::nan("");
  CHECK_THROWS_AS(aug_value(*obj, x, ParamBlock{bad, Vector::Zero(2)}, 1.0), NumericalError);
}

TEST_CASE("engine constructor validates its inputs") {
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  CHECK_THROWS_AS(SubproblemEngine(nullptr, 1.0), ConfigError);
  CHECK_THROWS_AS(SubproblemEngine(make_quadratic(h, Vector::Zero(1)), 0.0), ConfigError);
  CHECK_THROWS_AS(SubproblemEngine(make_quadratic(h, Vector::Zero(1)), -1.0), ConfigError);
  SubproblemEngine eng(make_quadratic(h, Vector::Zero(1)), 1.0);
  CHECK_THROWS_AS(eng.solve_exact(ParamBlock{vec1(0.0), vec1(0.0)}), SolverError);
  CHECK_THROWS_AS(eng.set_initial(Vector::Zero(2)), ConfigError);
}

TEST_CASE("solve_exact reproduces the 1-d hand example") {
  // min 0.5 x^2 + 0.5 (x - 1)^2 has minimizer 0.5
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  SubproblemEngine eng(make_quadratic(h, Vector::Zero(1)), 1.0);
  eng.set_initial(vec1(0.0));
  const SolveReport rep = eng.solve_exact(ParamBlock{vec1(1.0), vec1(0.0)});
  CHECK(rep.x[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.mode == SolveMode::exact_nlp);
  CHECK(rep.eps_norm <= 1e-8);
  CHECK(rep.newton_iters == 1);  // one Newton step is exact on a quadratic
  CHECK(rep.linear_solves == rep.newton_iters);
  CHECK(eng.current()[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(eng.has_last_params());
  CHECK(eng.last_params().x0[0] == doctest::Approx(1.0));
}

TEST_CASE("solve_exact agrees with the closed-form prox on random quadratics") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 6;
    const Matrix h = random_spd(n, 100 + seed, 0.5);
    const Vector g = random_vec(n, 200 + seed);
    const ParamBlock p{random_vec(n, 300 + seed), random_vec(n, 400 + seed)};
    const double rho = 0.5 + 0.1 * static_cast<double>(seed);

    SubproblemEngine eng(make_quadratic(h, g), rho);
    eng.set_initial(random_vec(n, 500 + seed));
    const SolveReport rep = eng.solve_exact(p);
    const Vector ref = quadratic_prox_reference(h, g, p, rho);
    CAPTURE(seed);
    CHECK((rep.x - ref).norm() <= 1e-7 * (1.0 + ref.norm()));
  }
}

TEST_CASE("solve_exact descends monotonically on a non-quadratic objective") {
  SubproblemEngine eng(std::make_shared<Quartic>(), 0.5);
  eng.set_initial(vec1(4.0));
  const ParamBlock p{vec1(-2.0), vec1(0.3)};
  const SolveReport rep = eng.solve_exact(p);
  CHECK(rep.eps_norm <= 1e-8);
  CHECK(std::abs(aug_grad(eng.objective(), rep.x, p, 0.5)[0]) <= 1e-8);
  REQUIRE(rep.f_history.size() == static_cast<std::size_t>(rep.newton_iters) + 1);
  // strict early on; accepted steps near the minimizer may sit on a
  // machine-precision plateau of the objective
  for (std::size_t i = 1; i < rep.f_history.size(); ++i)
    CHECK(rep.f_history[i] <=
          rep.f_history[i - 1] + 1e-14 * (1.0 + std::abs(rep.f_history[i - 1])));
  CHECK(rep.f_history[1] < rep.f_history[0]);
  CHECK(rep.f_history.back() < rep.f_history.front());
}

TEST_CASE("solve_exact reports progress when the iteration budget is exhausted") {
  NewtonOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = 1;
  SubproblemEngine eng(std::make_shared<Quartic>(), 0.5, opts);
  eng.set_initial(vec1(5.0));
  try {
    eng.solve_exact(ParamBlock{vec1(0.0), vec1(0.0)});
    FAIL("expected NewtonFailure");
  } catch (const NewtonFailure& e) {
    CHECK(e.best.allFinite());
    CHECK(e.eps_norm > 1e-12);
    CHECK(std::abs(e.best[0]) < 5.0);  // the one accepted step made progress
  }
}

TEST_CASE("warm start at the solution converges with zero Newton steps") {
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  SubproblemEngine eng(make_quadratic(h, Vector::Zero(1)), 1.0);
  eng.set_initial(vec1(-3.0));
  const SolveReport rep = eng.solve_exact(ParamBlock{vec1(1.0), vec1(0.0)}, vec1(0.5));
  CHECK(rep.newton_iters == 0);
  CHECK(rep.x[0] == doctest::Approx(0.5));
}

TEST_CASE("tangential predictor requires a committed solve") {
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  SubproblemEngine eng(make_quadratic(h, Vector::Zero(1)), 1.0);
  eng.set_initial(vec1(0.0));
  CHECK_THROWS_AS(eng.tangential_predict(ParamBlock{vec1(1.0), vec1(0.0)}), SolverError);
  CHECK_THROWS_AS(eng.last_params(), SolverError);
}

TEST_CASE("tangential predictor is exact on quadratics, 1-d hand case") {
  // After solving at x0 = 1 (minimizer 0.5), moving x0 to 2 gives
  // rhs = rho dx0 = 1, M = 2, so the step is 0.5 and the prediction is 1.0,
  // matching the closed form (rho x0 - lambda)/(1 + rho) = 2/2.
  Matrix h(1, 1);
  h(0, 0) = 1.0;
  SubproblemEngine eng(make_quadratic(h, Vector::Zero(1)), 1.0);
  eng.set_initial(vec1(0.0));
  eng.solve_exact(ParamBlock{vec1(1.0), vec1(0.0)});
  const Vector pred = eng.tangential_predict(ParamBlock{vec1(2.0), vec1(0.0)});
  CHECK(pred[0] == doctest::Approx(1.0).epsilon(1e-10));
  // no commit: the engine still holds the previous solution and parameters
  CHECK(eng.current()[0] == doctest::Approx(0.5));
  CHECK(eng.last_params().x0[0] == doctest::Approx(1.0));
}

TEST_CASE("tangential predictor matches the closed form on random quadratics") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 5;
    const Matrix h = random_spd(n, 600 + seed, 0.5);
    const Vector g = random_vec(n, 700 + seed);
    const double rho = 1.0 + 0.2 * static_cast<double>(seed);

    SubproblemEngine eng(make_quadratic(h, g), rho);
    eng.set_initial(Vector::Zero(n));
    eng.solve_exact(ParamBlock{random_vec(n, 800 + seed), random_vec(n, 900 + seed)});

    const ParamBlock p_new{random_vec(n, 1000 + seed), random_vec(n, 1100 + seed)};
    const Vector pred = eng.tangential_predict(p_new);
    const Vector ref = quadratic_prox_reference(h, g, p_new, rho);
    CAPTURE(seed);
    CHECK((pred - ref).norm() <= 1e-8 * (1.0 + ref.norm()));
  }
}

TEST_CASE("corrector step solves a quadratic subproblem from any point") {
  const int n = 4;
  const Matrix h = random_spd(n, 42, 1.0);
  const Vector g = random_vec(n, 43);
  const ParamBlock p{random_vec(n, 44), random_vec(n, 45)};
  SubproblemEngine eng(make_quadratic(h, g), 2.0);
  eng.set_initial(Vector::Zero(n));
  const Vector corrected = eng.corrector_step(random_vec(n, 46), p);
  const Vector ref = quadratic_prox_reference(h, g, p, 2.0);
  CHECK((corrected - ref).norm() <= 1e-8 * (1.0 + ref.norm()));
}

TEST_CASE("corrector steps contract the residual on a non-quadratic objective") {
  SubproblemEngine eng(std::make_shared<Quartic>(), 0.5);
  eng.set_initial(vec1(0.0));
  eng.solve_exact(ParamBlock{vec1(0.5), vec1(0.0)});

  const ParamBlock p{vec1(3.0), vec1(-0.2)};
  Vector x = eng.tangential_predict(p);
  double eps = aug_grad(eng.objective(), x, p, 0.5).norm();
  REQUIRE(eps > 1e-8);  // far parameter move leaves a visible residual
  for (int i = 0; i < 4 && eps > 1e-14; ++i) {
    x = eng.corrector_step(x, p);
    const double next = aug_grad(eng.objective(), x, p, 0.5).norm();
    CHECK(next < 0.5 * eps);
    eps = next;
  }
  CHECK(eps <= 1e-8);
}

TEST_CASE("approximate_solve commits and accounts one linear solve per step") {
  SubproblemEngine eng(std::make_shared<Quartic>(), 0.5);
  eng.set_initial(vec1(0.0));
  eng.solve_exact(ParamBlock{vec1(0.5), vec1(0.0)});

  const ParamBlock p{vec1(2.0), vec1(0.1)};
  const SolveReport rep = eng.approximate_solve(p, 1e-9, 10);
  CHECK(rep.eps_norm <= 1e-9);
  CHECK(rep.corrector_iters > 0);
  CHECK(rep.mode == SolveMode::predictor_corrected);
  CHECK(rep.linear_solves == 1 + rep.corrector_iters);
  CHECK(eng.current()[0] == doctest::Approx(rep.x[0]));
  CHECK(eng.last_params().x0[0] == doctest::Approx(2.0));
}

TEST_CASE("approximate_solve needs no corrector on quadratics") {
  const int n = 3;
  const Matrix h = random_spd(n, 77, 1.0);
  const Vector g = random_vec(n, 78);
  SubproblemEngine eng(make_quadratic(h, g), 1.5);
  eng.set_initial(Vector::Zero(n));
  eng.solve_exact(ParamBlock{random_vec(n, 79), random_vec(n, 80)});

  const SolveReport rep =
      eng.approximate_solve(ParamBlock{random_vec(n, 81), random_vec(n, 82)}, 1e-6, 5);
  CHECK(rep.corrector_iters == 0);
  CHECK(rep.mode == SolveMode::predictor);
  CHECK(rep.linear_solves == 1);
  CHECK(rep.eps_norm <= 1e-6);
}

TEST_CASE("prepared predictor systems change timing only, never results") {
  SubproblemEngine lazy(std::make_shared<Quartic>(), 0.5);
  SubproblemEngine prepped(std::make_shared<Quartic>(), 0.5);
  for (auto* eng : {&lazy, &prepped}) {
    eng->set_initial(vec1(0.0));
    eng->solve_exact(ParamBlock{vec1(0.5), vec1(0.0)});
  }
  prepped.prepare();

  const ParamBlock p{vec1(0.9), vec1(-0.1)};
  CHECK(lazy.tangential_predict(p)[0] == prepped.tangential_predict(p)[0]);  // bitwise

  // committing a new solution leaves the prepared system stale; it has to be
  // ignored, not reused at the old point
  lazy.approximate_solve(p, 1e-10, 10);
  prepped.approximate_solve(p, 1e-10, 10);
  const ParamBlock q{vec1(1.4), vec1(0.2)};
  CHECK(lazy.tangential_predict(q)[0] == prepped.tangential_predict(q)[0]);

  // before any committed solve there is nothing to assemble
  SubproblemEngine idle(std::make_shared<Quartic>(), 0.5);
  idle.prepare();
  idle.set_initial(vec1(0.0));
  idle.prepare();
}

TEST_CASE("approximate_solve surfaces the best point when the budget runs out") {
  SubproblemEngine eng(std::make_shared<Quartic>(), 0.5);
  eng.set_initial(vec1(0.0));
  eng.solve_exact(ParamBlock{vec1(0.5), vec1(0.0)});
  const Vector committed = eng.current();

  const ParamBlock p{vec1(4.0), vec1(0.0)};
  try {
    eng.approximate_solve(p, 1e-13, 0);
    FAIL("expected ToleranceUnreachable");
  } catch (const ToleranceUnreachable& e) {
    CHECK(e.report.eps_norm > 1e-13);
    CHECK(e.report.linear_solves == 1);
    CHECK(e.report.x.allFinite());
    // a failed attempt must not move the committed state
    CHECK(eng.current()[0] == doctest::Approx(committed[0]));
    CHECK(eng.last_params().x0[0] == doctest::Approx(0.5));
    // the carried point warm-starts an exact solve cheaply
    const SolveReport rescue = eng.solve_exact(p, e.report.x);
    CHECK(rescue.eps_norm <= 1e-8);
  }
  CHECK_THROWS_AS(eng.approximate_solve(ParamBlock{vec1(1.0), vec1(0.0)}, 0.0, 3), ConfigError);
}
