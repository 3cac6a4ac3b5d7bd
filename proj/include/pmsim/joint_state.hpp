#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>

#include "pmsim/eigenstates.hpp"

namespace pmsim {

// Measuring-device readout coordinate X: its grid, the initial Gaussian
// packet, and the pointer mass (infinite mass freezes the free dynamics,
// which is the default working point).
struct PointerConfig {
  Grid grid;
  Real center = 0.0;
  Real sigma = 0.0;
  Real mass = std::numeric_limits<Real>::infinity();

  bool frozen() const { return std::isinf(mass); }

  void validate() const {
    if (!(sigma > 0.0)) throw ConfigError("pointer.sigma must be positive");
    if (sigma < 2.0 * grid.dx())
      throw ConfigError(
          "pointer.sigma must be at least 2 grid spacings for the packet to "
          "be resolvable");
    if (!(mass > 0.0)) throw ConfigError("pointer.mass must be positive");
  }
};

// Gaussian packet with position standard deviation sigma, normalized on the
// pointer grid.
inline Eigen::VectorXcd gaussian_packet(const PointerConfig& ptr) {
  ptr.validate();
  const int n = ptr.grid.n;
  Eigen::VectorXcd phi(n);
  for (int j = 0; j < n; ++j) {
    const Real d = ptr.grid.point(j) - ptr.center;
    phi(j) = std::exp(-d * d / (4.0 * ptr.sigma * ptr.sigma));
  }
  phi /= phi.norm() * std::sqrt(ptr.grid.dx());
  return phi;
}

// Truncated energy eigenbasis of the protected system Hamiltonian:
// k states, dx-orthonormal, energies ascending.
struct SystemBasis {
  Grid grid;
  Eigen::VectorXd energies;   // k
  Eigen::MatrixXcd states;    // n x k

  int size() const { return static_cast<int>(energies.size()); }

  // Components of a grid state in this basis.
  Eigen::VectorXcd project(const WaveFunction& psi) const {
    require_same_grid(grid, psi.grid, "SystemBasis::project");
    return states.adjoint() * psi.amp * grid.dx();
  }

  WaveFunction synthesize(const Eigen::VectorXcd& coeff) const {
    return {grid, states * coeff};
  }
};

inline std::shared_ptr<const SystemBasis> make_system_basis(
    const HermitianObservable& system_h, int k) {
  if (k < 2)
    throw ConfigError("truncation must keep at least 2 levels (got " +
                      std::to_string(k) + ")");
  if (k > 16)
    throw ConfigError("truncation above 16 levels is not supported (got " +
                      std::to_string(k) + ")");
  const auto levels = eigenstates(system_h, k);
  auto basis = std::make_shared<SystemBasis>();
  basis->grid = system_h.grid;
  basis->energies.resize(k);
  basis->states.resize(system_h.grid.n, k);
  for (int i = 0; i < k; ++i) {
    basis->energies(i) = levels[i].energy;
    basis->states.col(i) = levels[i].state.amp;
  }
  return basis;
}

// System (x) pointer state: coeff(i, j) is the amplitude of system level i
// at pointer point j. Norm convention: sum |coeff|^2 dx_pointer = 1.
struct JointState {
  std::shared_ptr<const SystemBasis> basis;
  PointerConfig pointer;
  Eigen::MatrixXcd coeff;  // k x n_pointer
};

inline JointState product_state(std::shared_ptr<const SystemBasis> basis,
                                const Eigen::VectorXcd& system_coeff,
                                const PointerConfig& ptr) {
  if (system_coeff.size() != basis->size())
    throw ConfigError("system coefficient length does not match the basis");
  JointState s;
  s.basis = std::move(basis);
  s.pointer = ptr;
  s.coeff = system_coeff * gaussian_packet(ptr).transpose();
  return s;
}

inline Real joint_norm(const JointState& s) {
  return s.coeff.norm() * std::sqrt(s.pointer.grid.dx());
}

// <X> = sum_ij |c_ij|^2 X_j dx_pointer.
inline Real pointer_mean(const JointState& s) {
  const Eigen::VectorXd weights = s.coeff.cwiseAbs2().colwise().sum();
  Real mean = 0.0;
  for (int j = 0; j < s.pointer.grid.n; ++j)
    mean += weights(j) * s.pointer.grid.point(j);
  return mean * s.pointer.grid.dx();
}

// Reduced system density operator in the energy basis (trace 1 for a
// normalized joint state).
inline Eigen::MatrixXcd reduced_system_density(const JointState& s) {
  return s.coeff * s.coeff.adjoint() * s.pointer.grid.dx();
}

}  // namespace pmsim
