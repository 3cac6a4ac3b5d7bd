#pragma once

#include <Eigen/Dense>
#include <functional>

#include "pmsim/observable.hpp"
#include "pmsim/time_grid.hpp"

namespace pmsim {

// One Crank-Nicolson step: solve (I + i dt H / 2 hbar) psi' =
// (I - i dt H / 2 hbar) psi with H evaluated at the step midpoint.
// The Cayley form is exactly unitary for Hermitian H, so the norm is
// preserved to roundoff; the residual of the linear solve is checked.
class StaticPropagator {
 public:
  StaticPropagator(const HermitianObservable& h, Real dt, Real hbar)
      : grid_(h.grid), dt_(dt) {
    const Complex theta = kImag * dt / (2.0 * hbar);
    const Eigen::MatrixXcd eye =
        Eigen::MatrixXcd::Identity(h.grid.n, h.grid.n);
    plus_ = eye + theta * h.mat;
    minus_ = eye - theta * h.mat;
    lu_.compute(plus_);
  }

  Eigen::VectorXcd step(const Eigen::VectorXcd& psi) const {
    const Eigen::VectorXcd rhs = minus_ * psi;
    Eigen::VectorXcd out = lu_.solve(rhs);
    const Real residual = (plus_ * out - rhs).norm();
    const Real scale = rhs.norm();
    if (!(residual <= 1e-12 * std::max(scale, 1.0)))
      throw SolverFailure("Crank-Nicolson solve residual " +
                          std::to_string(residual) + " exceeds tolerance");
    const Real drift = std::abs(out.norm() - psi.norm());
    if (!(drift <= 1e-12 * std::max(scale, 1.0)))
      throw SolverFailure("Crank-Nicolson step lost norm by " +
                          std::to_string(drift));
    return out;
  }

  const Grid& grid() const { return grid_; }
  Real dt() const { return dt_; }

 private:
  Grid grid_;
  Real dt_;
  Eigen::MatrixXcd plus_, minus_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

inline WaveFunction step(const WaveFunction& psi, const HermitianObservable& h,
                         Real dt, const PhysicalConstants& c) {
  require_same_grid(psi.grid, h.grid, "step");
  StaticPropagator prop(h, dt, c.hbar);
  return {psi.grid, prop.step(psi.amp)};
}

// Repeated stepping under a static Hamiltonian; the factorization is reused.
// The observer, when given, sees (step_index, t, state) after every step,
// with step_index starting at 1.
inline WaveFunction propagate(
    const WaveFunction& psi0, const HermitianObservable& h,
    const TimeGrid& time, const PhysicalConstants& c,
    const std::function<void(int, Real, const WaveFunction&)>& observer = {}) {
  require_same_grid(psi0.grid, h.grid, "propagate");
  StaticPropagator prop(h, time.dt(), c.hbar);
  WaveFunction psi = psi0;
  for (int s = 1; s <= time.n_steps; ++s) {
    psi.amp = prop.step(psi.amp);
    if (observer) observer(s, time.time_at(s), psi);
  }
  return psi;
}

}  // namespace pmsim
