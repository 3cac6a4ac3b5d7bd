// Grid states, observables, and expectation values.
//
// Analytic anchors used as oracles:
//   - harmonic oscillator (hbar = m = omega = 1): rho(x) = pi^(-1/2) e^(-x^2),
//     <x^2> = 1/2
//   - plane wave on a ring: the central difference maps e^{ikx} to
//     i sin(k dx)/dx e^{ikx}, so the whole-ring current observable gives
//     (hbar k / m L) * sinc(k dx) exactly
#include <doctest.h>

#include "pmsim/eigenstates.hpp"
#include "pmsim/observable.hpp"
#include "test_support.hpp"

using namespace pmsim;

namespace {

WaveFunction uniform_ring_state(const Grid& grid) {
  Eigen::VectorXcd amp =
      Eigen::VectorXcd::Constant(grid.n, 1.0 / std::sqrt(grid.length()));
  return {grid, amp};
}

WaveFunction ring_plane_wave(const Grid& grid, int winding) {
  const Real k = 2.0 * M_PI * winding / grid.length();
  Eigen::VectorXcd amp(grid.n);
  for (int i = 0; i < grid.n; ++i)
    amp(i) = std::polar(1.0 / std::sqrt(grid.length()), k * grid.point(i));
  return {grid, amp};
}

// Discrete HO ground state computed independently of the library's
// eigenstates(): the Hamiltonian is assembled by hand and diagonalized
// directly.
WaveFunction oracle_ho_ground(const Grid& grid) {
  const int n = grid.n;
  const Real hop = 1.0 / (2.0 * grid.dx() * grid.dx());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Real x = grid.point(i);
    h(i, i) = 2.0 * hop + 0.5 * x * x;
    if (i + 1 < n) {
      h(i, i + 1) = -hop;
      h(i + 1, i) = -hop;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  Eigen::VectorXcd amp = solver.eigenvectors().col(0).cast<Complex>() /
                         std::sqrt(grid.dx());
  if (amp.real().sum() < 0) amp = -amp;
  return {grid, amp};
}

}  // namespace

TEST_CASE("normalize: uniform ring amplitudes become 1/sqrt(L)") {
  const Grid grid = Grid::ring(64, 0.0, 4.0);
  Eigen::VectorXcd amp = Eigen::VectorXcd::Constant(64, Complex(0.7, 0.0));
  const WaveFunction psi = normalize(WaveFunction(grid, amp));
  for (int i = 0; i < grid.n; ++i)
    CHECK(psi.amp(i).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(norm(psi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize: idempotent and scale invariant") {
  const Grid grid = Grid::box(64, -1.0, 1.0);
  const WaveFunction psi = testing::random_state(grid, 7);
  const WaveFunction again = normalize(psi);
  CHECK((again.amp - psi.amp).norm() <= 1e-13);
  WaveFunction doubled{grid, 2.0 * psi.amp};
  const WaveFunction renorm = normalize(doubled);
  CHECK((renorm.amp - psi.amp).norm() <= 1e-13);
}

TEST_CASE("normalize: zero state is rejected") {
  const Grid grid = Grid::box(16, 0.0, 1.0);
  WaveFunction zero{grid, Eigen::VectorXcd::Zero(16)};
  CHECK_THROWS_AS(normalize(zero), ZeroState);
}

TEST_CASE("expectation: identity gives 1 on any normalized state") {
  const Grid grid = Grid::ring(96, 0.0, 3.0);
  const HermitianObservable one = identity_observable(grid);
  for (unsigned seed : {1u, 2u, 3u, 4u})
    CHECK(expectation(one, testing::random_state(grid, seed)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expectation: <x> of the HO ground state vanishes by parity") {
  const Grid grid = Grid::box(256, -6.0, 6.0);
  const WaveFunction ground = oracle_ho_ground(grid);
  CHECK(std::abs(expectation(position_observable(grid), ground)) <= 1e-6);
}

TEST_CASE("expectation: <x^2> of the HO ground state matches the "
          "diagonalization oracle and the analytic 1/2") {
  const Grid grid = Grid::box(256, -6.0, 6.0);
  const WaveFunction oracle = oracle_ho_ground(grid);
  // Oracle route: quadrature on the independently diagonalized eigenvector.
  Real direct = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    const Real x = grid.point(i);
    direct += x * x * std::norm(oracle.amp(i)) * grid.dx();
  }
  const Real via_module =
      expectation(position_squared_observable(grid), oracle);
  CHECK(via_module == doctest::Approx(direct).epsilon(1e-12));
  CHECK(via_module == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("expectation: grid mismatch and non-Hermitian leak are rejected") {
  const Grid a = Grid::box(32, -1.0, 1.0);
  const Grid b = Grid::box(64, -1.0, 1.0);
  CHECK_THROWS_AS(
      expectation(identity_observable(a), testing::random_state(b, 1)),
      GridMismatch);
  // A deliberately non-Hermitian matrix, bypassing make_hermitian.
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(32, 32);
  bad(0, 1) = kImag;
  bad(1, 0) = kImag;
  HermitianObservable raw{a, bad, "bad"};
  CHECK_THROWS_AS(expectation(raw, testing::random_state(a, 2)),
                  NonHermitianLeak);
}

TEST_CASE("cell_projector: whole-domain cell returns 1/L") {
  const Grid grid = Grid::ring(64, 0.0, 5.0);
  const HermitianObservable whole = cell_projector(grid, {0, grid.n});
  CHECK(expectation(whole, testing::random_state(grid, 11)) ==
        doctest::Approx(1.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("cell_projector: flat density gives 1/L in every cell") {
  const Grid grid = Grid::ring(64, 0.0, 5.0);
  const WaveFunction flat = uniform_ring_state(grid);
  for (int begin : {0, 8, 24, 56}) {
    const HermitianObservable cell = cell_projector(grid, {begin, begin + 8});
    CHECK(expectation(cell, flat) ==
          doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("cell_projector: HO ground-state cell average matches Gaussian "
          "quadrature") {
  const Grid grid = Grid::box(256, -6.0, 6.0);
  const WaveFunction ground = oracle_ho_ground(grid);
  // Pick the cell whose points straddle x ~ 0.05; the rectangle-rule cell
  // corresponds to the interval [x_first - dx/2, x_last + dx/2].
  const CellRange cell{127, 131};
  const Real measured = expectation(cell_projector(grid, cell), ground);
  const Real lo = grid.point(cell.begin) - 0.5 * grid.dx();
  const Real hi = grid.point(cell.end - 1) + 0.5 * grid.dx();
  const Real averaged =
      testing::simpson(testing::ho_ground_density, lo, hi) / (hi - lo);
  CHECK(measured == doctest::Approx(averaged).epsilon(2e-3));
}

TEST_CASE("cell_projector: empty cell is rejected") {
  const Grid grid = Grid::ring(32, 0.0, 1.0);
  CHECK_THROWS_AS(cell_projector(grid, {4, 4}), EmptyCell);
  CHECK_THROWS_AS(cell_projector(grid, {30, 40}), EmptyCell);
}

TEST_CASE("current_observable: real states carry no current in any cell") {
  const Grid grid = Grid::box(96, -2.0, 2.0);
  const PhysicalConstants c;
  const WaveFunction real_psi = testing::random_real_state(grid, 5);
  for (int begin = 0; begin < grid.n; begin += 12) {
    const HermitianObservable cur =
        current_observable(grid, {begin, begin + 12}, c);
    CHECK(std::abs(expectation(cur, real_psi)) <= 1e-12);
  }
}

TEST_CASE("current_observable: ring plane wave reproduces the discrete "
          "dispersion hbar k sinc(k dx) / m L") {
  const Grid grid = Grid::ring(128, 0.0, 2.0 * M_PI);
  const PhysicalConstants c;
  for (int winding : {1, 3, 5}) {
    const WaveFunction psi = ring_plane_wave(grid, winding);
    const Real k = 2.0 * M_PI * winding / grid.length();
    const Real expected =
        c.hbar * std::sin(k * grid.dx()) / (grid.dx() * c.mass * grid.length());
    const Real measured =
        expectation(current_observable(grid, {0, grid.n}, c), psi);
    CHECK(measured == doctest::Approx(expected).epsilon(1e-12));
    // dx -> 0 limit: within O((k dx)^2) of hbar k / m L.
    CHECK(measured ==
          doctest::Approx(c.hbar * k / (c.mass * grid.length()))
              .epsilon(0.5 * std::pow(k * grid.dx(), 2)));
  }
}

TEST_CASE("current_observable: cell average equals the pointwise current of "
          "the same stencil") {
  const Grid grid = Grid::ring(96, 0.0, 4.0);
  const PhysicalConstants c;
  // A complex superposition with structure in both amplitude and phase.
  const WaveFunction a = ring_plane_wave(grid, 1);
  const WaveFunction b = ring_plane_wave(grid, -2);
  WaveFunction psi{grid, (0.8 * a.amp + Complex(0.3, 0.45) * b.amp)};
  psi = normalize(psi);
  const Eigen::VectorXd j = pointwise_current(psi, c);
  for (int begin = 0; begin < grid.n; begin += 16) {
    const CellRange cell{begin, begin + 16};
    const Real direct =
        j.segment(cell.begin, cell.size()).sum() * grid.dx() /
        (cell.size() * grid.dx());
    const Real via_obs = expectation(current_observable(grid, cell, c), psi);
    CHECK(via_obs == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("density_profile: flat ring, Gaussian ground state, node") {
  const Grid ring = Grid::ring(64, 0.0, 5.0);
  const Eigen::VectorXd flat = density_profile(uniform_ring_state(ring));
  for (int i = 0; i < ring.n; ++i)
    CHECK(flat(i) == doctest::Approx(0.2).epsilon(1e-12));

  // n odd puts a grid point exactly at x = 0.
  const Grid grid = Grid::box(255, -6.0, 6.0);
  const auto levels = eigenstates(
      hamiltonian_observable(grid,
                             0.5 * grid.points().array().square().matrix(),
                             PhysicalConstants{}),
      2);
  const Eigen::VectorXd rho0 = density_profile(levels[0].state);
  CHECK(rho0.sum() * grid.dx() == doctest::Approx(1.0).epsilon(1e-10));
  for (int i = 0; i < grid.n; i += 17)
    CHECK(rho0(i) ==
          doctest::Approx(testing::ho_ground_density(grid.point(i)))
              .epsilon(5e-3));

  // First excited state: odd parity forces a node at the origin.
  const Eigen::VectorXd rho1 = density_profile(levels[1].state);
  CHECK(rho1((grid.n - 1) / 2) <= 1e-10);
}

TEST_CASE("invariant: constructed observables are Hermitian with zero "
          "tolerance") {
  const Grid box = Grid::box(64, -2.0, 2.0);
  const Grid ring = Grid::ring(64, 0.0, 4.0);
  const PhysicalConstants c;
  const auto check_exact = [](const HermitianObservable& obs) {
    const Eigen::MatrixXcd diff = obs.mat - obs.mat.adjoint();
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
  };
  check_exact(identity_observable(box));
  check_exact(position_observable(box));
  check_exact(position_squared_observable(ring));
  check_exact(cell_projector(ring, {5, 19}));
  check_exact(current_observable(box, {3, 40}, c));
  check_exact(current_observable(ring, {50, 64}, c));
  check_exact(hamiltonian_observable(ring, Eigen::VectorXd::Zero(64), c, 0.3));
}

TEST_CASE("invariant: cell projectors over a partition resolve unity") {
  const Grid grid = Grid::box(96, -3.0, 3.0);
  const WaveFunction psi = testing::random_state(grid, 21);
  Real sum = 0.0;
  for (int begin = 0; begin < grid.n; begin += 8) {
    const CellRange cell{begin, begin + 8};
    const Real v = cell.size() * grid.dx();
    sum += v * expectation(cell_projector(grid, cell), psi);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
}
