#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "pmsim/wavefunction.hpp"

namespace pmsim {

// Half-open index range [begin, end) of grid points forming one spatial cell.
struct CellRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
};

inline void validate_cell(const Grid& grid, const CellRange& cell) {
  if (cell.begin < 0 || cell.end > grid.n || cell.size() <= 0)
    throw EmptyCell("cell [" + std::to_string(cell.begin) + ", " +
                    std::to_string(cell.end) + ") is empty or out of range");
}

// Hermitian matrix acting on grid samples. Construction goes through
// make_hermitian, which mirrors the lower triangle onto the upper one, so
// mat == mat.adjoint() holds entrywise with zero tolerance.
struct HermitianObservable {
  Grid grid;
  Eigen::MatrixXcd mat;
  std::string label;
};

inline Eigen::MatrixXcd hermitize(Eigen::MatrixXcd m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = Complex(m(i, i).real(), 0.0);
    for (Eigen::Index j = 0; j < i; ++j) m(j, i) = std::conj(m(i, j));
  }
  return m;
}

inline HermitianObservable make_hermitian(const Grid& grid,
                                          Eigen::MatrixXcd mat,
                                          std::string label) {
  if (mat.rows() != grid.n || mat.cols() != grid.n)
    throw ConfigError("observable '" + label + "' does not match its grid");
  return {grid, hermitize(std::move(mat)), std::move(label)};
}

// <psi|A|psi> dx. The identity observable yields exactly the squared norm,
// so a normalized state gives 1.
inline Real expectation(const HermitianObservable& obs,
                        const WaveFunction& psi) {
  require_same_grid(obs.grid, psi.grid, "expectation");
  const Complex value =
      (psi.amp.adjoint() * obs.mat * psi.amp)(0) * psi.grid.dx();
  if (std::abs(value.imag()) >= 1e-12)
    throw NonHermitianLeak("expectation of '" + obs.label +
                           "' has imaginary residual " +
                           std::to_string(value.imag()));
  return value.real();
}

inline HermitianObservable identity_observable(const Grid& grid) {
  return make_hermitian(grid, Eigen::MatrixXcd::Identity(grid.n, grid.n),
                        "identity");
}

inline HermitianObservable position_observable(const Grid& grid) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i) m(i, i) = grid.point(i);
  return make_hermitian(grid, std::move(m), "x");
}

inline HermitianObservable position_squared_observable(const Grid& grid) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const Real x = grid.point(i);
    m(i, i) = x * x;
  }
  return make_hermitian(grid, std::move(m), "x^2");
}

// Normalized indicator of a cell: 1/v on the cell, 0 elsewhere, v being the
// cell volume. Its expectation is the cell-averaged probability density.
inline HermitianObservable cell_projector(const Grid& grid,
                                          const CellRange& cell) {
  validate_cell(grid, cell);
  const Real inv_v = 1.0 / (cell.size() * grid.dx());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(grid.n, grid.n);
  for (int i = cell.begin; i < cell.end; ++i) m(i, i) = inv_v;
  return make_hermitian(grid, std::move(m),
                        "cell[" + std::to_string(cell.begin) + "," +
                            std::to_string(cell.end) + ")");
}

// Antisymmetric central-difference derivative. Ring grids wrap; box grids
// use the same stencil with zero padding (Dirichlet neighbors).
inline Eigen::MatrixXd derivative_matrix(const Grid& grid) {
  const int n = grid.n;
  const Real inv2dx = 1.0 / (2.0 * grid.dx());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    d(i, i + 1) = inv2dx;
    d(i + 1, i) = -inv2dx;
  }
  if (grid.boundary == Boundary::Ring) {
    d(n - 1, 0) = inv2dx;
    d(0, n - 1) = -inv2dx;
  }
  return d;
}

// Cell-averaged flux density: the symmetrized operator
// (hbar / 2 m i) (A D + D A) with A the normalized cell indicator and D the
// central difference. Its expectation equals the cell average of the
// pointwise current of the same stencil.
inline HermitianObservable current_observable(const Grid& grid,
                                              const CellRange& cell,
                                              const PhysicalConstants& c) {
  validate_cell(grid, cell);
  if (grid.n < 3) throw ConfigError("current observable needs >= 3 points");
  const Real inv_v = 1.0 / (cell.size() * grid.dx());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(grid.n);
  for (int i = cell.begin; i < cell.end; ++i) a(i) = inv_v;
  const Eigen::MatrixXd d = derivative_matrix(grid);
  // (hbar/2mi)(AD + DA): entries -i * (hbar/2m) * d_ij * (a_i + a_j); exact
  // Hermiticity follows from d antisymmetric and a real.
  const Real scale = c.hbar / (2.0 * c.mass);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      if (d(i, j) != 0.0)
        m(i, j) = -kImag * scale * d(i, j) * (a(i) + a(j));
  return make_hermitian(grid, std::move(m),
                        "current[" + std::to_string(cell.begin) + "," +
                            std::to_string(cell.end) + ")");
}

// Kinetic + potential Hamiltonian with the 2nd-order stencil. A nonzero
// flux (in flux quanta through a ring) enters as a constant link phase
// 2 pi flux / n, shifting the allowed wavenumbers to 2 pi (w - flux)/L.
inline HermitianObservable hamiltonian_observable(
    const Grid& grid, const Eigen::VectorXd& potential,
    const PhysicalConstants& c, Real flux = 0.0) {
  if (potential.size() != grid.n)
    throw ConfigError("potential length does not match grid.n_points");
  if (flux != 0.0 && grid.boundary != Boundary::Ring)
    throw ConfigError("system.flux requires a ring grid");
  const int n = grid.n;
  const Real hop = c.hbar * c.hbar / (2.0 * c.mass * grid.dx() * grid.dx());
  const Complex link = std::exp(-kImag * (2.0 * M_PI * flux / n));
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 2.0 * hop + potential(i);
    if (i + 1 < n) {
      m(i, i + 1) = -hop * link;
      m(i + 1, i) = -hop * std::conj(link);
    }
  }
  if (grid.boundary == Boundary::Ring) {
    m(n - 1, 0) = -hop * link;
    m(0, n - 1) = -hop * std::conj(link);
  }
  return make_hermitian(grid, std::move(m), "H");
}

}  // namespace pmsim
