#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "pmsim/eigenstates.hpp"
#include "pmsim/joint_state.hpp"

namespace pmsim {

// The two ways of keeping the measured state unchanged while the pointer
// couples to it: sit in a non-degenerate eigenstate of a static Hamiltonian
// and couple slowly, or project back onto a known target state many times
// during the run.
struct ProtectivePotential {
  Eigen::VectorXd potential;
  int level = 0;
};

struct ZenoProtection {
  WaveFunction target;
  int n_projections = 1;
};

using ProtectionScheme = std::variant<ProtectivePotential, ZenoProtection>;

inline std::string scheme_label(const ProtectionScheme& scheme) {
  if (std::holds_alternative<ProtectivePotential>(scheme)) {
    return "protective_potential[level=" +
           std::to_string(std::get<ProtectivePotential>(scheme).level) + "]";
  }
  const auto& z = std::get<ZenoProtection>(scheme);
  return "zeno[M=" + std::to_string(z.n_projections) + "]";
}

inline constexpr Real kDegeneracyGap = 1e-6;

// Verify the targeted level is isolated and return its eigenstate.
inline WaveFunction protected_eigenstate(const HermitianObservable& system_h,
                                         int level) {
  if (level < 0 || level >= system_h.grid.n - 1)
    throw ConfigError("scheme.level out of range");
  const auto levels = eigenstates(system_h, level + 2);
  const Real gap_up = levels[level + 1].energy - levels[level].energy;
  const Real gap_down =
      level > 0 ? levels[level].energy - levels[level - 1].energy : gap_up;
  if (std::min(gap_up, gap_down) <= kDegeneracyGap)
    throw DegenerateLevel("level " + std::to_string(level) +
                          " is degenerate (gap " +
                          std::to_string(std::min(gap_up, gap_down)) + ")");
  return levels[level].state;
}

// Protective potential: the level-th eigenstate of kinetic + potential.
// Zeno: the target state itself (renormalized defensively).
inline WaveFunction prepare_protected_state(const ProtectionScheme& scheme,
                                            const Grid& grid,
                                            const PhysicalConstants& c) {
  if (std::holds_alternative<ZenoProtection>(scheme)) {
    const auto& z = std::get<ZenoProtection>(scheme);
    if (z.n_projections < 1)
      throw ConfigError("scheme.projections must be at least 1");
    require_same_grid(grid, z.target.grid, "prepare_protected_state");
    return normalize(z.target);
  }
  const auto& p = std::get<ProtectivePotential>(scheme);
  return protected_eigenstate(hamiltonian_observable(grid, p.potential, c),
                              p.level);
}

// As above, but against an explicitly supplied Hamiltonian (covers systems
// whose protection is not of the plain kinetic + potential form, such as a
// ring threaded by flux).
inline WaveFunction prepare_protected_state(const ProtectionScheme& scheme,
                                            const HermitianObservable& system_h,
                                            const PhysicalConstants& c) {
  if (std::holds_alternative<ZenoProtection>(scheme))
    return prepare_protected_state(scheme, system_h.grid, c);
  return protected_eigenstate(system_h,
                              std::get<ProtectivePotential>(scheme).level);
}

// Apply |target><target| (x) I to a joint state and renormalize; returns the
// pre-renormalization squared norm (survival probability).
inline std::pair<JointState, Real> zeno_project(const JointState& joint,
                                                const WaveFunction& target) {
  Eigen::VectorXcd tau = joint.basis->project(target);
  const Real weight = tau.norm();
  if (weight * weight < 1.0 - 1e-6)
    throw TruncationTooSmall(
        "zeno target carries weight " + std::to_string(weight * weight) +
        " inside the truncated basis; enlarge the truncation");
  tau /= weight;
  const Eigen::RowVectorXcd row = tau.adjoint() * joint.coeff;
  JointState out = joint;
  out.coeff = tau * row;
  const Real survival = out.coeff.squaredNorm() * joint.pointer.grid.dx();
  if (survival < 1e-14)
    throw ZeroSurvival("projection annihilated the joint state");
  out.coeff /= std::sqrt(survival);
  return {std::move(out), survival};
}

// Phase-invariant overlap |<initial|final>|.
inline Real protection_fidelity(const WaveFunction& final_state,
                                const WaveFunction& initial) {
  return fidelity(final_state, initial);
}

// For a joint state, the overlap of the system marginal with the initial
// state: sqrt(<initial| rho_sys |initial>).
inline Real protection_fidelity(const JointState& final_state,
                                const WaveFunction& initial) {
  const Eigen::VectorXcd tau = final_state.basis->project(initial);
  const Eigen::MatrixXcd rho = reduced_system_density(final_state);
  const Complex q = (tau.adjoint() * rho * tau)(0);
  return std::sqrt(std::max(0.0, q.real()));
}

}  // namespace pmsim
