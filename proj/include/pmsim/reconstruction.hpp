#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "pmsim/parallel.hpp"
#include "pmsim/pm.hpp"

namespace pmsim {

// Disjoint contiguous cells covering the whole grid.
struct CellPartition {
  Grid grid;
  std::vector<CellRange> cells;

  int size() const { return static_cast<int>(cells.size()); }

  Real volume(int i) const { return cells[i].size() * grid.dx(); }

  Real center(int i) const {
    return 0.5 * (grid.point(cells[i].begin) + grid.point(cells[i].end - 1));
  }

  void validate() const {
    if (cells.empty()) throw ConfigError("partition has no cells");
    int expected = 0;
    for (const auto& cell : cells) {
      validate_cell(grid, cell);
      if (cell.begin != expected)
        throw ConfigError("partition cells must be disjoint and cover the "
                          "grid without gaps");
      expected = cell.end;
    }
    if (expected != grid.n)
      throw ConfigError("partition does not cover the whole grid");
  }
};

inline CellPartition uniform_partition(const Grid& grid, int n_cells) {
  if (n_cells < 1)
    throw ConfigError("cells must be at least 1 (got " +
                      std::to_string(n_cells) + ")");
  if (grid.n % n_cells != 0)
    throw ConfigError("cells must divide grid.n_points (" +
                      std::to_string(n_cells) + " vs " +
                      std::to_string(grid.n) + ")");
  CellPartition p;
  p.grid = grid;
  const int w = grid.n / n_cells;
  for (int i = 0; i < n_cells; ++i) p.cells.push_back({i * w, (i + 1) * w});
  return p;
}

// Everything one protective measurement needs except the observable; a
// campaign runs one PM per cell against this fixed setup.
struct PMCampaign {
  HermitianObservable system_h;
  ProtectionScheme scheme;
  PointerConfig pointer;
  TimeGrid time;
  int truncation = 8;
  PhysicalConstants constants;
  PMRunOptions options{/*trace_stride=*/0, /*check_residual=*/true};
  int n_threads = 0;  // 0: hardware default
};

struct ProfileMeasurement {
  Eigen::VectorXd values;     // one pointer shift per cell
  Eigen::VectorXd reference;  // exact expectation on the protected state
  Eigen::VectorXd pm_errors;  // |values - reference|
  Real min_survival = 1.0;
  Real max_norm_drift = 0.0;
};

namespace detail {

template <typename MakeObservable>
ProfileMeasurement measure_profile(const PMCampaign& campaign,
                                   const CellPartition& partition,
                                   MakeObservable&& make_observable) {
  partition.validate();
  require_same_grid(campaign.system_h.grid, partition.grid, "campaign");
  const FullSpectrum spec = full_spectrum(campaign.system_h);
  // Fail fast on an invalid scheme before dispatching per-cell runs.
  prepare_protected_state(campaign.scheme, campaign.system_h,
                          campaign.constants);

  const int n = partition.size();
  ProfileMeasurement out;
  out.values.resize(n);
  out.reference.resize(n);
  out.pm_errors.resize(n);
  Eigen::VectorXd survival(n), drift(n);
  parallel_for(
      n,
      [&](int i) {
        const HermitianObservable a = make_observable(partition.cells[i]);
        const PMResult r = run_protective_measurement(
            campaign.system_h, a, campaign.scheme, campaign.pointer,
            campaign.time, campaign.truncation, campaign.constants,
            campaign.options, &spec);
        out.values(i) = r.pointer_shift;
        out.reference(i) = r.reference_expectation;
        out.pm_errors(i) = r.shift_error();
        survival(i) = r.survival;
        drift(i) = r.max_norm_drift;
      },
      campaign.n_threads);
  out.min_survival = survival.minCoeff();
  out.max_norm_drift = drift.maxCoeff();
  return out;
}

}  // namespace detail

// One PM per cell with the normalized cell projector: the pointer shifts
// record the cell-averaged density profile.
inline ProfileMeasurement measure_density_profile(
    const PMCampaign& campaign, const CellPartition& partition) {
  return detail::measure_profile(campaign, partition,
                                 [&](const CellRange& cell) {
                                   return cell_projector(partition.grid, cell);
                                 });
}

// One PM per cell with the symmetrized current operator: cell-averaged flux.
inline ProfileMeasurement measure_current_profile(
    const PMCampaign& campaign, const CellPartition& partition) {
  return detail::measure_profile(
      campaign, partition, [&](const CellRange& cell) {
        return current_observable(partition.grid, cell, campaign.constants);
      });
}

inline constexpr Real kNodeFraction = 1e-6;

struct Reconstruction {
  WaveFunction psi;   // piecewise constant per cell on the partition's grid
  Real winding = std::numeric_limits<Real>::quiet_NaN();  // rings only
  int clamped_cells = 0;
  int gap_cells = 0;
};

// Rebuild the state from cell-averaged density and current, up to a global
// phase: amplitude sqrt(rho_n) per cell, phase integrated from the velocity
// field v = m j / (hbar rho) between adjacent cells (midpoint averages).
// Cells with rho below 1e-6 * max(rho) break the integration; across such a
// gap the phase continues the last valid segment's trend (the most recent
// velocity is reused), which keeps the rule deterministic. Rings also
// integrate across the wrap, giving the total phase winding.
inline Reconstruction reconstruct_wavefunction(const Eigen::VectorXd& rho_in,
                                               const Eigen::VectorXd& j_cells,
                                               const CellPartition& partition,
                                               const PhysicalConstants& c) {
  partition.validate();
  const int n = partition.size();
  if (rho_in.size() != n || j_cells.size() != n)
    throw ConfigError("profile lengths do not match the partition");

  Reconstruction out;
  Eigen::VectorXd rho = rho_in;
  for (int i = 0; i < n; ++i)
    if (rho(i) < 0.0) {
      rho(i) = 0.0;
      ++out.clamped_cells;
    }
  const Real rho_max = rho.maxCoeff();
  if (!(rho_max > 0.0))
    throw AllCellsBelowThreshold("all density cells vanish");
  const Real eps_node = kNodeFraction * rho_max;
  int live = 0;
  for (int i = 0; i < n; ++i)
    if (rho(i) >= eps_node) ++live;
  if (live == 0)
    throw AllCellsBelowThreshold("all density cells fall below the node "
                                 "threshold");

  // Phase increments between neighboring cell centers.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Real v_last = 0.0;
  auto velocity = [&](int a, int b, bool& valid) {
    const Real rho_mid = 0.5 * (rho(a) + rho(b));
    valid = rho(a) >= eps_node && rho(b) >= eps_node;
    if (!valid) return v_last;
    return c.mass * 0.5 * (j_cells(a) + j_cells(b)) / (c.hbar * rho_mid);
  };
  for (int i = 0; i + 1 < n; ++i) {
    bool valid = false;
    const Real dx_cells = partition.center(i + 1) - partition.center(i);
    const Real v = velocity(i, i + 1, valid);
    theta(i + 1) = theta(i) + v * dx_cells;
    if (valid)
      v_last = v;
    else
      ++out.gap_cells;
  }
  if (partition.grid.boundary == Boundary::Ring) {
    bool valid = false;
    const Real v = velocity(n - 1, 0, valid);
    const Real dx_wrap =
        partition.grid.length() - (partition.center(n - 1) - partition.center(0));
    const Real total = theta(n - 1) + v * dx_wrap - theta(0);
    out.winding = total / (2.0 * M_PI);
  }

  Eigen::VectorXcd amp(partition.grid.n);
  for (int i = 0; i < n; ++i) {
    const Complex value = std::polar(std::sqrt(rho(i)), theta(i));
    for (int p = partition.cells[i].begin; p < partition.cells[i].end; ++p)
      amp(p) = value;
  }
  out.psi = normalize(WaveFunction(partition.grid, std::move(amp)));
  return out;
}

struct ReconstructionReport {
  Eigen::VectorXd rho_cells;
  Eigen::VectorXd j_cells;
  WaveFunction psi_reconstructed;
  Real fidelity_to_truth = std::numeric_limits<Real>::quiet_NaN();
  Eigen::VectorXd rho_reference;  // exact expectations on the protected state
  Eigen::VectorXd j_reference;
  Eigen::VectorXd rho_pm_errors;
  Eigen::VectorXd j_pm_errors;
  Real winding = std::numeric_limits<Real>::quiet_NaN();
  int clamped_cells = 0;
  Real min_survival = 1.0;
  Real max_norm_drift = 0.0;
};

// Full campaign: density profile, current profile, reconstruction, and
// (when the true state is supplied) the fidelity of the rebuilt state.
inline ReconstructionReport run_reconstruction_campaign(
    const PMCampaign& campaign, const CellPartition& partition,
    const WaveFunction* truth = nullptr) {
  const ProfileMeasurement rho = measure_density_profile(campaign, partition);
  const ProfileMeasurement cur = measure_current_profile(campaign, partition);
  const Reconstruction rec = reconstruct_wavefunction(
      rho.values, cur.values, partition, campaign.constants);

  ReconstructionReport report;
  report.rho_cells = rho.values;
  report.j_cells = cur.values;
  report.psi_reconstructed = rec.psi;
  report.rho_reference = rho.reference;
  report.j_reference = cur.reference;
  report.rho_pm_errors = rho.pm_errors;
  report.j_pm_errors = cur.pm_errors;
  report.winding = rec.winding;
  report.clamped_cells = rec.clamped_cells;
  report.min_survival = std::min(rho.min_survival, cur.min_survival);
  report.max_norm_drift = std::max(rho.max_norm_drift, cur.max_norm_drift);
  if (truth) report.fidelity_to_truth = fidelity(rec.psi, *truth);
  return report;
}

}  // namespace pmsim
