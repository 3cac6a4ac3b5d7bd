#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "pmsim/errors.hpp"

namespace pmsim {

using Real = double;
using Complex = std::complex<double>;

inline constexpr Complex kImag{0.0, 1.0};

// Units: hbar carries action, masses carry mass; defaults are natural units.
struct PhysicalConstants {
  Real hbar = 1.0;
  Real mass = 1.0;
  Real pointer_mass = 1.0;

  void validate() const {
    if (!(hbar > 0.0)) throw ConfigError("constants.hbar must be positive");
    if (!(mass > 0.0)) throw ConfigError("constants.mass must be positive");
    if (!(pointer_mass > 0.0))
      throw ConfigError("constants.pointer_mass must be positive");
  }
};

enum class Boundary { Box, Ring };

// Uniform 1D spatial grid. Box grids keep interior points only (the wave
// function vanishes at x_min and x_max by construction), so dx spans
// (x_max - x_min)/(n + 1). Ring grids identify x_max with x_min and use
// dx = (x_max - x_min)/n.
struct Grid {
  int n = 0;
  Real x_min = 0.0;
  Real x_max = 0.0;
  Boundary boundary = Boundary::Box;

  static Grid box(int n_points, Real x_min, Real x_max) {
    return make(n_points, x_min, x_max, Boundary::Box);
  }
  static Grid ring(int n_points, Real x_min, Real x_max) {
    return make(n_points, x_min, x_max, Boundary::Ring);
  }
  static Grid make(int n_points, Real x_min, Real x_max, Boundary boundary) {
    if (n_points < 8)
      throw ConfigError("grid.n_points must be at least 8 (got " +
                        std::to_string(n_points) + ")");
    if (!(x_max > x_min))
      throw ConfigError("grid domain is empty: x_max must exceed x_min");
    Grid g;
    g.n = n_points;
    g.x_min = x_min;
    g.x_max = x_max;
    g.boundary = boundary;
    return g;
  }

  Real length() const { return x_max - x_min; }

  Real dx() const {
    return boundary == Boundary::Box ? length() / (n + 1) : length() / n;
  }

  Real point(int i) const {
    return boundary == Boundary::Box ? x_min + (i + 1) * dx()
                                     : x_min + i * dx();
  }

  Eigen::VectorXd points() const {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = point(i);
    return x;
  }

  bool operator==(const Grid& o) const {
    return n == o.n && x_min == o.x_min && x_max == o.x_max &&
           boundary == o.boundary;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline void require_same_grid(const Grid& a, const Grid& b,
                              const char* where) {
  if (a != b)
    throw GridMismatch(std::string(where) +
                       ": operands live on different grids");
}

}  // namespace pmsim
