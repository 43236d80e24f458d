#include "sadmm/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace sadmm {

Norms norms(const Vector& v) {
  Norms n;
  n.two = v.norm();
  n.inf = v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  return n;
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols())
    throw NumericalError("SymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                         std::to_string(m_.cols()) + ", expected square");
  if (!m_.allFinite()) throw NumericalError("SymMatrix: non-finite entries");
  const double skew = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (m_.size() > 0 && skew > 1e-10)
    throw NumericalError("SymMatrix: asymmetry " + std::to_string(skew) + " exceeds 1e-10");
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
  return SymMatrix(0.5 * (m + m.transpose()));
}

Vector solve_sym(const SymMatrix& a, const Vector& b, SolveInfo* info) {
  const Matrix& m = a.mat();
  if (m.rows() != b.size())
    throw NumericalError("solve_sym: dimension mismatch");
  if (!b.allFinite()) throw NumericalError("solve_sym: non-finite rhs");

  const double anorm = m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
  const double bnorm = b.size() == 0 ? 0.0 : b.lpNorm<Eigen::Infinity>();
  const double tau0 = 1e-8 * (1.0 + anorm);
  const double tau_max = 1e6 * (1.0 + anorm);

  SolveInfo local;
  Eigen::LLT<Matrix> llt;
  double tau = 0.0;
  for (;;) {
    ++local.attempts;
    if (tau == 0.0) {
      llt.compute(m);
    } else {
      llt.compute(m + tau * Matrix::Identity(m.rows(), m.cols()));
    }
    if (llt.info() == Eigen::Success) break;
    tau = tau == 0.0 ? tau0 : 2.0 * tau;
    if (tau > tau_max)
      throw NumericalError("solve_sym: system singular, shift exceeded 1e6*(1+||A||_inf)");
  }
  local.shift = tau;

  Vector x = llt.solve(b);
  local.residual_inf = (m * x - b).lpNorm<Eigen::Infinity>();
  if (tau == 0.0 && local.residual_inf > 1e-8 * (1.0 + bnorm)) {
    // one round of iterative refinement covers mildly ill-conditioned systems
    x += llt.solve(b - m * x);
    local.residual_inf = (m * x - b).lpNorm<Eigen::Infinity>();
    if (local.residual_inf > 1e-8 * (1.0 + bnorm))
      throw NumericalError("solve_sym: residual " + std::to_string(local.residual_inf) +
                           " violates postcondition");
  }
  if (!x.allFinite()) throw NumericalError("solve_sym: non-finite solution");
  if (info) *info = local;
  return x;
}

}  // namespace sadmm
