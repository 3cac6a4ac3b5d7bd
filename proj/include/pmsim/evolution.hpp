#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pmsim/coupling.hpp"
#include "pmsim/crank_nicolson.hpp"
#include "pmsim/joint_state.hpp"
#include "pmsim/time_grid.hpp"

namespace pmsim {

// Joint Hamiltonian over the truncated energy basis (x) pointer grid:
//
//   H(t) = diag(E) (x) I  +  I (x) H_ptr  +  g(t) A (x) P
//
// with P = -i hbar D on the pointer grid (central difference) and H_ptr the
// free pointer kinetic term (absent for an infinitely heavy pointer).
struct HamiltonianSchedule {
  Eigen::VectorXd energies;   // k system energies
  Eigen::MatrixXcd coupling;  // measured observable in the energy basis, k x k
  CouplingProfile g;
  Real hbar = 1.0;
};

struct TraceSample {
  Real t;
  Real x_mean;
  Real norm;
};

// Crank-Nicolson integrator for the joint state, midpoint-sampled coupling:
//
//   (I + i dt H(t_mid) / 2 hbar) c' = (I - i dt H(t_mid) / 2 hbar) c
//
// Two direct solve strategies, picked by the pointer boundary:
//  - Box pointer: the step matrix is block tridiagonal over pointer points
//    (k x k blocks), solved by block LU elimination.
//  - Ring pointer: P and H_ptr are circulant, so the discrete Fourier modes
//    of the pointer decouple; each mode needs one k x k solve per step.
// Both are exact solves; a global residual and the norm are checked per step.
class JointEvolver {
 public:
  JointEvolver(const JointState& initial, HamiltonianSchedule sched,
               TimeGrid time, bool check_residual = true)
      : sched_(std::move(sched)),
        time_(time),
        basis_(initial.basis),
        pointer_(initial.pointer),
        check_residual_(check_residual) {
    k_ = static_cast<int>(initial.coeff.rows());
    np_ = pointer_.grid.n;
    if (initial.coeff.cols() != np_)
      throw ConfigError("joint state does not match the pointer grid");
    if (sched_.energies.size() != k_ || sched_.coupling.rows() != k_ ||
        sched_.coupling.cols() != k_)
      throw ConfigError("schedule dimensions do not match the joint state");
    dxp_ = pointer_.grid.dx();
    use_modes_ = pointer_.grid.boundary == Boundary::Ring;
    if (use_modes_) {
      build_modes();
      coeff_ = to_modes(initial.coeff);
    } else {
      coeff_ = initial.coeff;
      lus_.resize(np_);
    }
    if (!pointer_.frozen()) {
      kinetic_diag_ = sched_.hbar * sched_.hbar / (pointer_.mass * dxp_ * dxp_);
      kinetic_off_ = -0.5 * kinetic_diag_;
    }
    m_plus_.resize(k_, k_);
    m_minus_.resize(k_, k_);
    scratch_.resize(k_);
  }

  // Advance through time-grid steps [begin, end). trace_stride > 0 records
  // every stride-th step; the caller records segment endpoints explicitly
  // via record_sample (stride 0 keeps the sweep itself silent).
  void run_steps(int begin, int end, int trace_stride,
                 std::vector<TraceSample>* trace) {
    if (trace && trace->empty()) record(begin, trace);
    for (int s = begin; s < end; ++s) {
      step_once(s, time_.dt());
      if (trace && trace_stride > 0 && (s + 1) % trace_stride == 0)
        record(s + 1, trace);
    }
  }

  // Append the current sample unless it is already the latest trace entry.
  void record_sample(int step, std::vector<TraceSample>& trace) const {
    if (!trace.empty() && trace.back().t == time_.time_at(step)) return;
    record(step, &trace);
  }

  // Replay steps [begin, end) in reverse with negated dt; exact inverse of
  // the forward sweep in exact arithmetic.
  void run_steps_reversed(int begin, int end) {
    for (int s = end - 1; s >= begin; --s) step_once(s, -time_.dt());
  }

  // Project the system factor onto a unit direction in the energy basis and
  // renormalize. Returns the pre-renormalization squared norm (survival).
  Real project_system(const Eigen::VectorXcd& direction) {
    const Eigen::RowVectorXcd row = direction.adjoint() * coeff_;
    coeff_ = direction * row;
    const Real survival = coeff_.squaredNorm() * dxp_;
    if (survival < 1e-14)
      throw ZeroSurvival("projection annihilated the joint state (survival " +
                         std::to_string(survival) + ")");
    coeff_ /= std::sqrt(survival);
    return survival;
  }

  Real norm() const { return coeff_.norm() * std::sqrt(dxp_); }

  Real x_mean() const {
    const Eigen::MatrixXcd pos = position_coeff();
    const Eigen::VectorXd w = pos.cwiseAbs2().colwise().sum();
    Real mean = 0.0;
    for (int j = 0; j < np_; ++j) mean += w(j) * pointer_.grid.point(j);
    return mean * dxp_;
  }

  JointState state() const {
    JointState s;
    s.basis = basis_;
    s.pointer = pointer_;
    s.coeff = position_coeff();
    return s;
  }

  Eigen::MatrixXcd reduced_density() const {
    // Both representations are unitarily related on the pointer index, so
    // the system marginal can be taken in either.
    return coeff_ * coeff_.adjoint() * dxp_;
  }

  Real max_norm_drift() const { return max_norm_drift_; }

 private:
  void record(int step, std::vector<TraceSample>* trace) const {
    trace->push_back({time_.time_at(step), x_mean(), norm()});
  }

  Eigen::MatrixXcd position_coeff() const {
    return use_modes_ ? from_modes(coeff_) : coeff_;
  }

  void build_modes() {
    // Unit-root table instead of a dense n x n transform matrix; the
    // transforms walk the table with index arithmetic, keeping memory O(n).
    twiddles_.resize(np_);
    mode_momentum_.resize(np_);
    const Real step = 2.0 * M_PI / np_;
    const Real scale = 1.0 / std::sqrt(static_cast<Real>(np_));
    for (int m = 0; m < np_; ++m)
      twiddles_(m) = std::polar(scale, -step * m);
    for (int kappa = 0; kappa < np_; ++kappa)
      mode_momentum_(kappa) = sched_.hbar * std::sin(step * kappa) / dxp_;
  }

  // c_tilde(i, kappa) = sum_j c(i, j) exp(-2 pi i j kappa / n) / sqrt(n)
  Eigen::MatrixXcd to_modes(const Eigen::MatrixXcd& c) const {
    return transform(c, /*inverse=*/false);
  }

  Eigen::MatrixXcd from_modes(const Eigen::MatrixXcd& c) const {
    return transform(c, /*inverse=*/true);
  }

  Eigen::MatrixXcd transform(const Eigen::MatrixXcd& c, bool inverse) const {
    Eigen::MatrixXcd out(k_, np_);
    for (int kappa = 0; kappa < np_; ++kappa) {
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(k_);
      std::int64_t idx = 0;
      for (int j = 0; j < np_; ++j) {
        Complex w = twiddles_(static_cast<int>(idx));
        if (inverse) w = std::conj(w);
        acc += c.col(j) * w;
        idx += kappa;
        if (idx >= np_) idx -= np_;
      }
      out.col(kappa) = acc;
    }
    return out;
  }

  void step_once(int s, Real dt) {
    const Real t_mid = (s + 0.5) * time_.dt();
    const Real g_mid = sched_.g(t_mid);
    const Real norm_before = coeff_.norm();
    if (use_modes_)
      step_modes(g_mid, dt);
    else
      step_block_tridiagonal(g_mid, dt);
    const Real drift = std::abs(coeff_.norm() - norm_before);
    if (!(drift <= 1e-12 * std::max(norm_before, 1.0)))
      throw SolverFailure("joint step lost norm by " + std::to_string(drift));
    max_norm_drift_ =
        std::max(max_norm_drift_, std::abs(norm() - 1.0));
  }

  // Ring pointer: per Fourier mode kappa the step reduces to the k x k system
  //   (I + i theta (diag(E) + T_k I + g p_k A)) c' = (I - i theta (...)) c.
  void step_modes(Real g_mid, Real dt) {
    const Complex theta = kImag * dt / (2.0 * sched_.hbar);
    Real res2 = 0.0, rhs2 = 0.0;
    for (int kappa = 0; kappa < np_; ++kappa) {
      const Real kin =
          pointer_.frozen()
              ? 0.0
              : kinetic_diag_ - kinetic_diag_ * std::cos(2.0 * M_PI * kappa /
                                                         np_);
      const Real lambda = g_mid * mode_momentum_(kappa);
      m_plus_ = theta * lambda * sched_.coupling;
      m_minus_ = -m_plus_;
      for (int i = 0; i < k_; ++i) {
        const Complex d = theta * (sched_.energies(i) + kin);
        m_plus_(i, i) += 1.0 + d;
        m_minus_(i, i) += 1.0 - d;
      }
      scratch_ = m_minus_ * coeff_.col(kappa);
      if (check_residual_) {
        rhs2 += scratch_.squaredNorm();
        m_work_ = m_plus_;
        solve_in_place(m_work_, scratch_);
        res2 += (m_plus_ * scratch_ - m_minus_ * coeff_.col(kappa))
                    .squaredNorm();
      } else {
        m_work_ = m_plus_;
        solve_in_place(m_work_, scratch_);
      }
      coeff_.col(kappa) = scratch_;
    }
    if (check_residual_ &&
        !(std::sqrt(res2) <= 1e-12 * std::max(std::sqrt(rhs2), 1e-30)))
      throw SolverFailure("joint mode solve residual exceeds tolerance");
  }

  // In-place LU without pivoting; the step matrices are strongly diagonally
  // dominant (unit diagonal plus O(dt) couplings), so pivoting is not needed
  // and the global residual check guards the assumption.
  static void solve_in_place(Eigen::MatrixXcd& m, Eigen::VectorXcd& b) {
    const int n = static_cast<int>(m.rows());
    for (int p = 0; p < n; ++p) {
      const Complex piv = m(p, p);
      if (std::abs(piv) < 1e-300)
        throw SolverFailure("vanishing pivot in joint mode solve");
      for (int r = p + 1; r < n; ++r) {
        const Complex f = m(r, p) / piv;
        if (f != Complex(0.0, 0.0)) {
          for (int c = p + 1; c < n; ++c) m(r, c) -= f * m(p, c);
          b(r) -= f * b(p);
        }
      }
    }
    for (int r = n - 1; r >= 0; --r) {
      Complex acc = b(r);
      for (int c = r + 1; c < n; ++c) acc -= m(r, c) * b(c);
      b(r) = acc / m(r, r);
    }
  }

  // Box pointer: block tridiagonal elimination over pointer points. All
  // block rows share the same three blocks because the grid is uniform and
  // the pointer carries no potential.
  void step_block_tridiagonal(Real g_mid, Real dt) {
    const Complex theta = kImag * dt / (2.0 * sched_.hbar);
    const Real beta = dt / (4.0 * dxp_);  // i theta * (-i hbar / 2 dxp)
    const Complex off_kin = theta * kinetic_off_;

    const Eigen::MatrixXcd up_p =
        beta * g_mid * sched_.coupling +
        off_kin * Eigen::MatrixXcd::Identity(k_, k_);
    const Eigen::MatrixXcd lo_p =
        -beta * g_mid * sched_.coupling +
        off_kin * Eigen::MatrixXcd::Identity(k_, k_);
    Eigen::VectorXcd diag_p(k_), diag_m(k_);
    for (int i = 0; i < k_; ++i) {
      const Complex d = theta * (sched_.energies(i) + kinetic_diag_);
      diag_p(i) = 1.0 + d;
      diag_m(i) = 1.0 - d;
    }

    // Right-hand side B = M_minus * coeff, batched over pointer columns.
    Eigen::MatrixXcd b = diag_m.asDiagonal() * coeff_;
    b.leftCols(np_ - 1).noalias() += (-up_p) * coeff_.rightCols(np_ - 1);
    b.rightCols(np_ - 1).noalias() += (-lo_p) * coeff_.leftCols(np_ - 1);

    const Real rhs_norm = check_residual_ ? b.norm() : 0.0;

    // Forward elimination; factors are kept for the back substitution.
    Eigen::MatrixXcd dense_diag = diag_p.asDiagonal();
    lus_[0].compute(dense_diag);
    for (int j = 1; j < np_; ++j) {
      const Eigen::MatrixXcd y = lus_[j - 1].solve(up_p);
      b.col(j).noalias() -= lo_p * lus_[j - 1].solve(b.col(j - 1)).eval();
      dense_diag = diag_p.asDiagonal();
      dense_diag.noalias() -= lo_p * y;
      lus_[j].compute(dense_diag);
    }
    Eigen::MatrixXcd x(k_, np_);
    x.col(np_ - 1) = lus_[np_ - 1].solve(b.col(np_ - 1));
    for (int j = np_ - 2; j >= 0; --j)
      x.col(j) = lus_[j].solve((b.col(j) - up_p * x.col(j + 1)).eval());

    if (check_residual_) {
      Eigen::MatrixXcd r = diag_p.asDiagonal() * x;
      r.leftCols(np_ - 1).noalias() += up_p * x.rightCols(np_ - 1);
      r.rightCols(np_ - 1).noalias() += lo_p * x.leftCols(np_ - 1);
      // b was consumed by the elimination; rebuild the right-hand side.
      Eigen::MatrixXcd rhs = diag_m.asDiagonal() * coeff_;
      rhs.leftCols(np_ - 1).noalias() += (-up_p) * coeff_.rightCols(np_ - 1);
      rhs.rightCols(np_ - 1).noalias() += (-lo_p) * coeff_.leftCols(np_ - 1);
      if (!((r - rhs).norm() <= 1e-12 * std::max(rhs_norm, 1e-30)))
        throw SolverFailure("joint block solve residual exceeds tolerance");
    }
    coeff_ = std::move(x);
  }

  HamiltonianSchedule sched_;
  TimeGrid time_;
  std::shared_ptr<const SystemBasis> basis_;
  PointerConfig pointer_;
  bool check_residual_;
  int k_ = 0, np_ = 0;
  Real dxp_ = 0.0;
  bool use_modes_ = false;
  Real kinetic_diag_ = 0.0, kinetic_off_ = 0.0;
  Real max_norm_drift_ = 0.0;

  Eigen::MatrixXcd coeff_;  // momentum rep on ring pointers, else position
  Eigen::VectorXcd twiddles_;
  Eigen::VectorXd mode_momentum_;
  Eigen::MatrixXcd m_plus_, m_minus_, m_work_;
  Eigen::VectorXcd scratch_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lus_;
};

struct EvolveResult {
  JointState state;
  std::vector<TraceSample> trace;
  Real max_norm_drift = 0.0;
};

// Evolve a joint state over the full interval, recording (t, <X>, norm).
inline EvolveResult evolve(const JointState& initial,
                           const HamiltonianSchedule& sched,
                           const TimeGrid& time, int trace_stride = 1,
                           bool check_residual = true) {
  JointEvolver ev(initial, sched, time, check_residual);
  EvolveResult out;
  ev.run_steps(0, time.n_steps, trace_stride, &out.trace);
  ev.record_sample(time.n_steps, out.trace);
  out.state = ev.state();
  out.max_norm_drift = ev.max_norm_drift();
  return out;
}

}  // namespace pmsim
