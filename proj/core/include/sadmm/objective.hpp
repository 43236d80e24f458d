#pragma once

#include <memory>

#include "sadmm/linalg.hpp"

namespace sadmm {

// Smooth local objective J(x) as seen by one worker's subproblem solver.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual SymMatrix hessian(const Vector& x) const = 0;
};

// 0.5 x^T H x + g^T x + c
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(SymMatrix h, Vector g, double c = 0.0);

  Eigen::Index dim() const override { return g_.size(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  SymMatrix hessian(const Vector& x) const override;

 private:
  SymMatrix h_;
  Vector g_;
  double c_;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

}  // namespace sadmm
