#pragma once

#include <Eigen/Dense>

#include "sadmm/errors.hpp"

namespace sadmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Norms {
  double two = 0.0;
  double inf = 0.0;
};

Norms norms(const Vector& v);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Dense symmetric matrix. Construction checks finiteness and symmetry to
// 1e-10 absolute; use symmetrize() when the input carries roundoff skew.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m);

  // 0.5*(m + m^T), bitwise symmetric, then the usual checks
  static SymMatrix symmetrize(const Matrix& m);

  const Matrix& mat() const { return m_; }
  Eigen::Index size() const { return m_.rows(); }

 private:
  Matrix m_;
};

struct SolveInfo {
  double shift = 0.0;   // tau actually applied to the diagonal
  int attempts = 0;     // factorization attempts
  double residual_inf = 0.0;  // ||A x - b||_inf against the unshifted A
};

// Solve A x = b for symmetric A via Cholesky. If the factorization fails
// (A not positive definite), a diagonal shift tau*I is added, starting at
// 1e-8*(1 + ||A||_inf) and doubling until it succeeds; the shift is reported
// through `info`. Throws NumericalError once tau exceeds 1e6*(1 + ||A||_inf).
// For shift == 0 the residual satisfies ||A x - b||_inf <= 1e-8*(1 + ||b||_inf),
// enforced with one step of iterative refinement if needed.
Vector solve_sym(const SymMatrix& a, const Vector& b, SolveInfo* info = nullptr);

}  // namespace sadmm
