#pragma once

#include <string>
#include <vector>

namespace sadmm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Finite-difference validation of every analytic gradient, 100 seeds per model.
std::vector<CheckResult> run_gradcheck();

// Algorithmic identities: closed-form updates, dual-step identity, quadratic
// equivalence of the sensitivity path, determinism of repeated runs.
std::vector<CheckResult> run_invariant_checks();

// Replays the descent and boundedness bounds on a quadratic instance with an
// admissible penalty, and confirms the guard trips on an inadmissible one.
std::vector<CheckResult> run_theory_checks();

}  // namespace sadmm
