#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pmsim/observable.hpp"

namespace pmsim {

struct EnergyLevel {
  Real energy;
  WaveFunction state;
};

namespace detail {

// Rotate so the largest-magnitude amplitude is real positive. Degenerate
// maxima resolve to the first index, which keeps the choice deterministic.
inline void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index imax = 0;
  Real best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Real a = std::abs(v(i));
    if (a > best) {
      best = a;
      imax = i;
    }
  }
  if (best <= 0.0) return;
  v *= std::conj(v(imax)) / best;
}

}  // namespace detail

// Full spectrum of a Hermitian grid operator, states made orthonormal in the
// dx-weighted inner product and phase-fixed. Energies come out ascending.
inline std::vector<EnergyLevel> eigenstates(const HermitianObservable& h,
                                            int k) {
  if (k < 1 || k > h.grid.n)
    throw ConfigError("eigenstates: k must lie in [1, n_points]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.mat);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("eigendecomposition of '" + h.label +
                             "' failed to converge");
  const Real scale = 1.0 / std::sqrt(h.grid.dx());
  std::vector<EnergyLevel> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXcd v = solver.eigenvectors().col(i) * scale;
    detail::fix_phase(v);
    out.push_back({solver.eigenvalues()(i), WaveFunction(h.grid, std::move(v))});
  }
  return out;
}

}  // namespace pmsim
