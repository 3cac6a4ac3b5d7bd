#pragma once

#include <stdexcept>
#include <string>

namespace pmsim {

// Two failure families, mapped to CLI exit codes: bad inputs or mismatched
// objects (exit 2), and numerical breakdown during a run (exit 3).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroState : NumericalError {
  using NumericalError::NumericalError;
};
struct GridMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct NonHermitianLeak : NumericalError {
  using NumericalError::NumericalError;
};
struct EmptyCell : ConfigError {
  using ConfigError::ConfigError;
};
struct ConvergenceFailure : NumericalError {
  using NumericalError::NumericalError;
};
struct SolverFailure : NumericalError {
  using NumericalError::NumericalError;
};
struct DegenerateLevel : NumericalError {
  using NumericalError::NumericalError;
};
struct ZeroSurvival : NumericalError {
  using NumericalError::NumericalError;
};
struct TruncationTooSmall : NumericalError {
  using NumericalError::NumericalError;
};
struct AllCellsBelowThreshold : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace pmsim
