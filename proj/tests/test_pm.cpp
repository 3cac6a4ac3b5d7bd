// The protective measurement protocol and the projective contrast case.
#include <doctest.h>

#include <cstring>

#include "pmsim/pm.hpp"
#include "test_support.hpp"

using namespace pmsim;

namespace {

struct HoSetup {
  PhysicalConstants constants;
  Grid grid = Grid::box(160, -6.0, 6.0);
  Eigen::VectorXd potential;
  HermitianObservable hamiltonian;

  HoSetup()
      : potential(0.5 * grid.points().array().square().matrix()),
        hamiltonian(hamiltonian_observable(grid, potential, constants)) {}

  ProtectionScheme protective(int level = 0) const {
    return ProtectivePotential{potential, level};
  }

  ProtectionScheme zeno(int m) const {
    const auto levels = eigenstates(hamiltonian, 1);
    return ZenoProtection{levels[0].state, m};
  }
};

PointerConfig ring_pointer(int n = 256, Real sigma = 0.5) {
  PointerConfig p;
  p.grid = Grid::ring(n, -3.0, 3.5);
  p.sigma = sigma;
  return p;
}

}  // namespace

TEST_CASE("PM of the identity: unit shift, unit fidelity, both schemes") {
  const HoSetup s;
  const HermitianObservable one = identity_observable(s.grid);
  const TimeGrid time = TimeGrid::make(4.0, 256);
  PMRunOptions opts;
  opts.trace_stride = 0;
  // Pointer resolution bounds the shift accuracy here: the central-difference
  // momentum slightly under-translates a packet of momentum spread
  // 1/(2 sigma), by dx^2/(8 sigma^2) relative.
  const PointerConfig ptr = ring_pointer(512, 0.5);
  const Real floor = std::pow(ptr.grid.dx(), 2) / (8.0 * 0.5 * 0.5);

  for (const ProtectionScheme& scheme :
       {s.protective(0), s.zeno(8)}) {
    const PMResult r = run_protective_measurement(
        s.hamiltonian, one, scheme, ptr, time, 2, s.constants, opts);
    CHECK(r.reference_expectation == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.pointer_shift - 1.0) <= 3.0 * floor);
    CHECK(std::abs(r.system_fidelity - 1.0) <= 1e-9);
    CHECK(std::abs(r.survival - 1.0) <= 1e-9);
    CHECK(r.max_norm_drift <= 1e-9);
  }
}

TEST_CASE("PM of x on the HO ground state: zero shift by parity") {
  const HoSetup s;
  const TimeGrid time = TimeGrid::make(20.0, 1280);
  PMRunOptions opts;
  opts.trace_stride = 0;
  const PMResult r = run_protective_measurement(
      s.hamiltonian, position_observable(s.grid), s.protective(0),
      ring_pointer(), time, 6, s.constants, opts);
  CHECK(std::abs(r.reference_expectation) <= 1e-6);
  CHECK(std::abs(r.pointer_shift) <= 1e-4);
  CHECK(r.system_fidelity >= 0.999);
}

TEST_CASE("PM of x^2: shift approaches <x^2> as T grows") {
  const HoSetup s;
  const HermitianObservable a = position_squared_observable(s.grid);
  PMRunOptions opts;
  opts.trace_stride = 0;
  std::vector<Real> errors;
  for (const Real t_total : {5.0, 10.0, 20.0}) {
    const TimeGrid time =
        TimeGrid::make(t_total, static_cast<int>(t_total * 64));
    const PMResult r = run_protective_measurement(
        s.hamiltonian, a, s.protective(0), ring_pointer(), time, 6,
        s.constants, opts);
    CHECK(r.reference_expectation == doctest::Approx(0.5).epsilon(5e-3));
    errors.push_back(r.shift_error() / r.reference_expectation);
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
  CHECK(errors[2] <= 0.02);
}

TEST_CASE("PM runs are bit-identical across repetitions") {
  const HoSetup s;
  const TimeGrid time = TimeGrid::make(5.0, 320);
  PMRunOptions opts;
  opts.trace_stride = 4;
  const auto run = [&] {
    return run_protective_measurement(
        s.hamiltonian, position_squared_observable(s.grid), s.protective(0),
        ring_pointer(), time, 6, s.constants, opts);
  };
  const PMResult a = run();
  const PMResult b = run();
  CHECK(std::memcmp(&a.pointer_shift, &b.pointer_shift, sizeof(Real)) == 0);
  CHECK(std::memcmp(&a.system_fidelity, &b.system_fidelity, sizeof(Real)) ==
        0);
  REQUIRE(a.pointer_trace.size() == b.pointer_trace.size());
  for (std::size_t i = 0; i < a.pointer_trace.size(); ++i) {
    CHECK(a.pointer_trace[i].x_mean == b.pointer_trace[i].x_mean);
    CHECK(a.pointer_trace[i].norm == b.pointer_trace[i].norm);
  }
}

TEST_CASE("truncation gate: dropping the dominant coupled level is refused") {
  const HoSetup s;
  const TimeGrid time = TimeGrid::make(5.0, 320);
  PMRunOptions opts;
  opts.trace_stride = 0;
  // x^2 couples the ground state almost entirely to level 2; truncating at
  // k = 2 silently removes that channel, so the gate must fire.
  CHECK_THROWS_AS(
      run_protective_measurement(s.hamiltonian,
                                 position_squared_observable(s.grid),
                                 s.protective(0), ring_pointer(), time, 2,
                                 s.constants, opts),
      TruncationTooSmall);
  // The identity couples to nothing; k = 2 is fine.
  CHECK_NOTHROW(run_protective_measurement(
      s.hamiltonian, identity_observable(s.grid), s.protective(0),
      ring_pointer(), time, 2, s.constants, opts));
}

TEST_CASE("zeno: leakage 1 - survival shrinks as projections double") {
  const HoSetup s;
  const HermitianObservable a = position_squared_observable(s.grid);
  PMRunOptions opts;
  opts.trace_stride = 0;
  const TimeGrid time = TimeGrid::make(6.0, 384);
  std::vector<Real> leakage;
  for (const int m : {4, 8, 16, 32}) {
    const PMResult r = run_protective_measurement(
        s.hamiltonian, a, s.zeno(m), ring_pointer(), time, 6, s.constants,
        opts);
    leakage.push_back(1.0 - r.survival);
    CHECK(std::abs(r.system_fidelity - 1.0) <= 1e-9);  // post-projection
  }
  for (std::size_t i = 1; i < leakage.size(); ++i)
    CHECK(leakage[i] < leakage[i - 1]);
}

TEST_CASE("pointer_mean: centering and translation covariance") {
  const HoSetup s;
  const FullSpectrum spec = full_spectrum(s.hamiltonian);
  auto basis = basis_from_spectrum(spec, 3);
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(3);
  coeff(0) = 1.0;

  // Symmetric domain so the packet mean is zero to roundoff.
  PointerConfig centered;
  centered.grid = Grid::ring(160, -3.25, 3.25);
  centered.sigma = 0.4;
  const JointState at_zero = product_state(basis, coeff, centered);
  CHECK(std::abs(pointer_mean(at_zero)) <= 1e-10);

  // Rigid translation: roll the same packet by a whole number of grid
  // points; the mean must move by exactly that many spacings.
  const int roll = 8;
  const Eigen::VectorXcd packet = gaussian_packet(centered);
  Eigen::VectorXcd rolled(packet.size());
  for (int j = 0; j < packet.size(); ++j)
    rolled((j + roll) % packet.size()) = packet(j);
  JointState at_s = at_zero;
  at_s.coeff = coeff * rolled.transpose();
  CHECK(pointer_mean(at_s) - pointer_mean(at_zero) ==
        doctest::Approx(roll * centered.grid.dx()).epsilon(1e-10));
}

TEST_CASE("pointer_mean: mid-run mean follows the integrated drift") {
  const HoSetup s;
  const HermitianObservable a = position_squared_observable(s.grid);
  const Real t_total = 10.0;
  const TimeGrid time = TimeGrid::make(t_total, 640);
  PMRunOptions opts;
  opts.trace_stride = 1;
  const PMResult r = run_protective_measurement(
      s.hamiltonian, a, s.protective(0), ring_pointer(320, 0.7), time, 6,
      s.constants, opts);
  const CouplingProfile g =
      CouplingProfile::make(CouplingShape::RaisedCosine, t_total);
  // Compare <X>(t) against <A> * integral of g up to t at mid run.
  const int mid = 320;
  Real cumulative = 0.0;
  const Real dt = time.dt();
  for (int i = 0; i < mid; ++i) cumulative += g((i + 0.5) * dt) * dt;
  const Real expected = r.reference_expectation * cumulative;
  const Real measured = r.pointer_trace[mid].x_mean -
                        r.pointer_trace.front().x_mean;
  CHECK(measured == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("born: an eigenstate always yields its eigenvalue") {
  const HoSetup s;
  const auto levels = eigenstates(s.hamiltonian, 1);
  const BornSample sample =
      run_projective_measurement(s.hamiltonian, levels[0].state, 2000, 42);
  for (int i = 0; i < sample.samples.size(); ++i)
    CHECK(sample.samples(i) ==
          doctest::Approx(levels[0].energy).epsilon(1e-9));
}

TEST_CASE("born: symmetric state splits evenly between half-domain "
          "projector outcomes") {
  const Grid grid = Grid::box(128, -2.0, 2.0);
  const PhysicalConstants c;
  const Eigen::VectorXd pot = 0.5 * grid.points().array().square().matrix();
  const WaveFunction ground = prepare_protected_state(
      ProtectivePotential{pot, 0}, grid, c);
  const HermitianObservable half = cell_projector(grid, {0, grid.n / 2});
  const int n = 10000;
  const BornSample sample = run_projective_measurement(half, ground, n, 7);
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (sample.samples(i) > 0.0) ++hits;
  const Real fraction = static_cast<Real>(hits) / n;
  CHECK(std::abs(fraction - 0.5) <= 3.0 / std::sqrt(static_cast<Real>(n)));
}

TEST_CASE("born: same seed gives identical draws, different seed differs") {
  const HoSetup s;
  const auto ground = eigenstates(s.hamiltonian, 1)[0].state;
  const HermitianObservable a = position_squared_observable(s.grid);
  const BornSample r1 = run_projective_measurement(a, ground, 5000, 123);
  const BornSample r2 = run_projective_measurement(a, ground, 5000, 123);
  const BornSample r3 = run_projective_measurement(a, ground, 5000, 321);
  CHECK((r1.samples - r2.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.samples - r3.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("born: sample mean converges to the expectation value") {
  const HoSetup s;
  const auto ground = eigenstates(s.hamiltonian, 1)[0].state;
  const HermitianObservable a = position_squared_observable(s.grid);
  const Real mean_ref = expectation(a, ground);
  // sigma^2 = <A^2> - <A>^2 from quadrature on the same state.
  Real second = 0.0;
  for (int i = 0; i < s.grid.n; ++i)
    second += std::pow(s.grid.point(i), 4) * std::norm(ground.amp(i)) *
              s.grid.dx();
  const Real sigma = std::sqrt(second - mean_ref * mean_ref);
  const int n = 200000;
  const BornSample sample = run_projective_measurement(a, ground, n, 99);
  CHECK(std::abs(sample.sample_mean - mean_ref) <=
        3.0 * sigma / std::sqrt(static_cast<Real>(n)));
}
