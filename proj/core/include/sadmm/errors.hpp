#pragma once

#include <stdexcept>
#include <string>

namespace sadmm {

// Error taxonomy, mapped to CLI exit codes in tools/:
//   ConfigError, IoError        -> 2 (bad data or configuration)
//   NumericalError, SolverError -> 3 (solver failure)
//   ProtocolError               -> 4 (transport failure)
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// non-finite values, singular systems, shift budget exhausted
struct NumericalError : Error {
  using Error::Error;
};

// solver-level failures: Newton out of iterations, line search stalled
struct SolverError : Error {
  using Error::Error;
};

// framing violations, stale rounds, worker disconnects
struct ProtocolError : Error {
  using Error::Error;
};

}  // namespace sadmm
