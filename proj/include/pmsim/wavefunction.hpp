#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pmsim/grid.hpp"

namespace pmsim {

// Complex amplitudes sampled on a grid; normalization uses the rectangle-rule
// inner product <a|b> = sum conj(a_k) b_k dx, so amplitudes carry dimension
// 1/sqrt(length).
struct WaveFunction {
  Grid grid;
  Eigen::VectorXcd amp;

  WaveFunction() = default;
  WaveFunction(Grid g, Eigen::VectorXcd a) : grid(g), amp(std::move(a)) {
    if (amp.size() != grid.n)
      throw ConfigError("wave function length does not match its grid");
  }
};

inline Complex overlap(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a.grid, b.grid, "overlap");
  return (a.amp.adjoint() * b.amp)(0) * a.grid.dx();
}

inline Real norm(const WaveFunction& psi) {
  return psi.amp.norm() * std::sqrt(psi.grid.dx());
}

inline WaveFunction normalize(const WaveFunction& psi) {
  const Real n = norm(psi);
  if (n < 1e-14) throw ZeroState("cannot normalize a zero state");
  return {psi.grid, psi.amp / n};
}

// Phase-invariant overlap magnitude |<a|b>|.
inline Real fidelity(const WaveFunction& a, const WaveFunction& b) {
  return std::abs(overlap(a, b));
}

inline Eigen::VectorXd density_profile(const WaveFunction& psi) {
  return psi.amp.cwiseAbs2();
}

// Pointwise probability current (hbar/m) Im[conj(psi) D psi] with the same
// central-difference stencil used by the current observable.
inline Eigen::VectorXd pointwise_current(const WaveFunction& psi,
                                         const PhysicalConstants& c) {
  const int n = psi.grid.n;
  const Real inv2dx = 1.0 / (2.0 * psi.grid.dx());
  Eigen::VectorXd j(n);
  for (int i = 0; i < n; ++i) {
    Complex up{0.0, 0.0}, dn{0.0, 0.0};
    if (psi.grid.boundary == Boundary::Ring) {
      up = psi.amp((i + 1) % n);
      dn = psi.amp((i + n - 1) % n);
    } else {
      if (i + 1 < n) up = psi.amp(i + 1);
      if (i - 1 >= 0) dn = psi.amp(i - 1);
    }
    const Complex d = (up - dn) * inv2dx;
    j(i) = (c.hbar / c.mass) * std::imag(std::conj(psi.amp(i)) * d);
  }
  return j;
}

}  // namespace pmsim
