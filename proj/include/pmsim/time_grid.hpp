#pragma once

#include <string>

#include "pmsim/errors.hpp"

namespace pmsim {

// Measurement interval [0, T] split into n_steps equal steps.
struct TimeGrid {
  double t_total = 0.0;
  int n_steps = 0;

  static TimeGrid make(double t_total, int n_steps) {
    if (!(t_total > 0.0))
      throw ConfigError("time.T must be positive (got " +
                        std::to_string(t_total) + ")");
    if (n_steps < 16)
      throw ConfigError("time.n_steps must be at least 16 (got " +
                        std::to_string(n_steps) + ")");
    return {t_total, n_steps};
  }

  double dt() const { return t_total / n_steps; }
  double time_at(int step) const { return step * dt(); }
};

}  // namespace pmsim
