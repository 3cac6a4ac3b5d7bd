#pragma once

#include <chrono>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmsim/config.hpp"
#include "pmsim/reconstruction.hpp"

namespace pmsim {

// Physics objects realized from a config: grid, potential, Hamiltonian.
struct SystemSetup {
  Grid grid;
  Eigen::VectorXd potential;
  HermitianObservable hamiltonian;
  PhysicalConstants constants;
};

inline SystemSetup build_system(const ExperimentConfig& c) {
  SystemSetup s;
  s.constants = PhysicalConstants{};
  switch (c.system) {
    case SystemKind::Box:
      s.grid = Grid::box(c.n_points, -0.5 * c.length, 0.5 * c.length);
      s.potential = Eigen::VectorXd::Zero(c.n_points);
      break;
    case SystemKind::Harmonic: {
      s.grid = Grid::box(c.n_points, -0.5 * c.length, 0.5 * c.length);
      s.potential.resize(c.n_points);
      for (int i = 0; i < c.n_points; ++i) {
        const Real x = s.grid.point(i);
        s.potential(i) = 0.5 * s.constants.mass * c.omega * c.omega * x * x;
      }
      break;
    }
    case SystemKind::Ring:
      s.grid = Grid::ring(c.n_points, 0.0, c.length);
      s.potential = Eigen::VectorXd::Zero(c.n_points);
      break;
  }
  s.hamiltonian =
      hamiltonian_observable(s.grid, s.potential, s.constants, c.flux);
  return s;
}

inline PointerConfig build_pointer(const ExperimentConfig& c) {
  PointerConfig p;
  p.grid = Grid::make(c.pointer_n_points, c.pointer_x_min, c.pointer_x_max,
                      c.pointer_boundary);
  p.center = c.pointer_center;
  p.sigma = c.pointer_sigma;
  p.mass = c.pointer_mass;
  p.validate();
  return p;
}

// Discrete plane wave exp(i 2 pi w x / L)/sqrt(L) on a ring.
inline WaveFunction plane_wave(const Grid& grid, int winding) {
  if (grid.boundary != Boundary::Ring)
    throw ConfigError("plane-wave targets require a ring grid");
  const Real k = 2.0 * M_PI * winding / grid.length();
  Eigen::VectorXcd amp(grid.n);
  for (int i = 0; i < grid.n; ++i)
    amp(i) = std::polar(1.0 / std::sqrt(grid.length()), k * grid.point(i));
  return {grid, amp};
}

inline ProtectionScheme build_scheme(const ExperimentConfig& c,
                                     const SystemSetup& s) {
  if (c.scheme == SchemeKind::ProtectivePotential)
    return ProtectivePotential{s.potential, c.level};
  WaveFunction target =
      c.zeno_target == ZenoTargetKind::Winding
          ? plane_wave(s.grid, c.zeno_target_index)
          : eigenstates(s.hamiltonian, c.zeno_target_index + 1).back().state;
  return ZenoProtection{std::move(target), c.projections};
}

inline HermitianObservable build_observable(const ExperimentConfig& c,
                                            const SystemSetup& s) {
  switch (c.observable) {
    case ObservableKind::Identity:
      return identity_observable(s.grid);
    case ObservableKind::Position:
      return position_observable(s.grid);
    case ObservableKind::PositionSquared:
      return position_squared_observable(s.grid);
    case ObservableKind::CellProjector:
      return cell_projector(
          s.grid, uniform_partition(s.grid, c.cells).cells[c.cell_index]);
    case ObservableKind::Current:
      return current_observable(
          s.grid, uniform_partition(s.grid, c.cells).cells[c.cell_index],
          s.constants);
  }
  throw ConfigError("observable.kind is not set");
}

// One flat output row; inapplicable columns stay empty.
struct ResultRecord {
  std::string config_hash;
  std::string sweep_param;
  std::optional<double> sweep_value;
  std::optional<double> pointer_shift;
  std::optional<double> reference_expectation;
  std::optional<double> shift_error;
  std::optional<double> fidelity;
  std::optional<double> survival;
  double wall_time_s = 0.0;
};

inline constexpr const char* kCsvHeader =
    "config_hash,sweep_param,sweep_value,pointer_shift,reference_expectation,"
    "shift_error,fidelity,survival,wall_time_s";

namespace detail {

inline std::string opt_str(const std::optional<double>& v) {
  return v ? cfg::format_double(*v) : std::string();
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

inline std::string record_csv_line(const ResultRecord& r) {
  return r.config_hash + "," + r.sweep_param + "," + opt_str(r.sweep_value) +
         "," + opt_str(r.pointer_shift) + "," +
         opt_str(r.reference_expectation) + "," + opt_str(r.shift_error) +
         "," + opt_str(r.fidelity) + "," + opt_str(r.survival) + "," +
         cfg::format_double(r.wall_time_s);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open output.path '" + path + "'");
  return out;
}

class StopWatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace detail

inline void write_records_csv(const std::string& path,
                              const std::vector<ResultRecord>& rows) {
  auto out = detail::open_output(path);
  out << kCsvHeader << "\n";
  for (const auto& r : rows) out << detail::record_csv_line(r) << "\n";
}

inline void write_records_json(const std::string& path,
                               const std::vector<ResultRecord>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"config_hash", r.config_hash},
                   {"sweep_param", r.sweep_param},
                   {"sweep_value", detail::opt_json(r.sweep_value)},
                   {"pointer_shift", detail::opt_json(r.pointer_shift)},
                   {"reference_expectation",
                    detail::opt_json(r.reference_expectation)},
                   {"shift_error", detail::opt_json(r.shift_error)},
                   {"fidelity", detail::opt_json(r.fidelity)},
                   {"survival", detail::opt_json(r.survival)},
                   {"wall_time_s", r.wall_time_s}});
  }
  auto out = detail::open_output(path);
  out << arr.dump(2) << "\n";
}

inline void write_records(const ExperimentConfig& c,
                          const std::vector<ResultRecord>& rows) {
  if (c.output_format == OutputFormat::Csv)
    write_records_csv(c.output_path, rows);
  else
    write_records_json(c.output_path, rows);
}

// Apply one sweep value, returning the effective config of that run. A swept
// T keeps dt fixed by scaling n_steps (rounded up to a multiple of the Zeno
// projection count when applicable).
inline ExperimentConfig apply_sweep(const ExperimentConfig& base,
                                    SweepParameter p, double value) {
  ExperimentConfig c = base;
  c.has_sweep = false;
  c.sweep_values.clear();
  switch (p) {
    case SweepParameter::T: {
      const double dt = base.t_total / base.n_steps;
      int n = std::max(16, static_cast<int>(std::lround(value / dt)));
      if (c.scheme == SchemeKind::Zeno) {
        const int m = c.projections;
        n = ((n + m - 1) / m) * m;
      }
      c.t_total = value;
      c.n_steps = n;
      break;
    }
    case SweepParameter::NSteps:
      c.n_steps = static_cast<int>(std::lround(value));
      break;
    case SweepParameter::ZenoM:
      c.projections = static_cast<int>(std::lround(value));
      break;
    case SweepParameter::Cells:
      c.cells = static_cast<int>(std::lround(value));
      break;
  }
  return c;
}

struct CommandResult {
  std::vector<ResultRecord> rows;
  std::vector<std::string> files_written;
};

inline PMResult execute_single_pm(const ExperimentConfig& c) {
  const SystemSetup setup = build_system(c);
  const ProtectionScheme scheme = build_scheme(c, setup);
  const PointerConfig pointer = build_pointer(c);
  const HermitianObservable a = build_observable(c, setup);
  const TimeGrid time = TimeGrid::make(c.t_total, c.n_steps);
  PMRunOptions opts;
  opts.trace_stride = c.trace_stride;
  opts.coupling = c.coupling;
  return run_protective_measurement(setup.hamiltonian, a, scheme, pointer,
                                    time, c.truncation, setup.constants, opts);
}

inline CommandResult run_pm_command(const ExperimentConfig& c) {
  validate(c);
  const std::string hash = config_hash(c);
  std::vector<double> points;
  if (c.has_sweep)
    points = c.sweep_values;
  else
    points.push_back(0.0);

  CommandResult out;
  out.rows.resize(points.size());
  parallel_for(
      static_cast<int>(points.size()),
      [&](int i) {
        const ExperimentConfig run_cfg =
            c.has_sweep ? apply_sweep(c, c.sweep_parameter, points[i]) : c;
        detail::StopWatch watch;
        const PMResult r = execute_single_pm(run_cfg);
        ResultRecord row;
        row.config_hash = hash;
        if (c.has_sweep) {
          row.sweep_param = to_string(c.sweep_parameter);
          row.sweep_value = points[i];
        }
        row.pointer_shift = r.pointer_shift;
        row.reference_expectation = r.reference_expectation;
        row.shift_error = r.shift_error();
        row.fidelity = r.system_fidelity;
        row.survival = r.survival;
        row.wall_time_s = watch.seconds();
        out.rows[i] = std::move(row);
      },
      c.threads > 0 ? c.threads : 1);

  write_records(c, out.rows);
  out.files_written.push_back(c.output_path);
  return out;
}

inline CommandResult run_reconstruct_command(const ExperimentConfig& c) {
  validate(c);
  if (c.has_sweep && c.sweep_parameter == SweepParameter::ZenoM &&
      c.scheme != SchemeKind::Zeno)
    throw ConfigError("sweep.parameter zeno_M requires scheme.kind = zeno");
  const std::string hash = config_hash(c);
  std::vector<double> points;
  if (c.has_sweep)
    points = c.sweep_values;
  else
    points.push_back(0.0);

  CommandResult out;
  const std::string cells_path = c.output_path + ".cells.csv";
  auto cells_file = detail::open_output(cells_path);
  cells_file << "config_hash,sweep_value,cell_index,x_center,volume,"
                "rho,rho_reference,rho_pm_error,j,j_reference,j_pm_error\n";

  for (std::size_t i = 0; i < points.size(); ++i) {
    const ExperimentConfig run_cfg =
        c.has_sweep ? apply_sweep(c, c.sweep_parameter, points[i]) : c;
    detail::StopWatch watch;
    const SystemSetup setup = build_system(run_cfg);
    PMCampaign campaign;
    campaign.system_h = setup.hamiltonian;
    campaign.scheme = build_scheme(run_cfg, setup);
    campaign.pointer = build_pointer(run_cfg);
    campaign.time = TimeGrid::make(run_cfg.t_total, run_cfg.n_steps);
    campaign.truncation = run_cfg.truncation;
    campaign.constants = setup.constants;
    campaign.options.trace_stride = 0;
    campaign.options.coupling = run_cfg.coupling;
    campaign.n_threads = run_cfg.threads > 0 ? run_cfg.threads : 1;
    const CellPartition partition =
        uniform_partition(setup.grid, run_cfg.cells);
    const WaveFunction truth = prepare_protected_state(
        campaign.scheme, setup.hamiltonian, setup.constants);
    const ReconstructionReport report =
        run_reconstruction_campaign(campaign, partition, &truth);

    ResultRecord row;
    row.config_hash = hash;
    if (c.has_sweep) {
      row.sweep_param = to_string(c.sweep_parameter);
      row.sweep_value = points[i];
    }
    row.fidelity = report.fidelity_to_truth;
    row.survival = report.min_survival;
    row.wall_time_s = watch.seconds();
    out.rows.push_back(std::move(row));

    for (int n = 0; n < partition.size(); ++n) {
      cells_file << hash << ","
                 << (c.has_sweep ? cfg::format_double(points[i])
                                 : std::string())
                 << "," << n << "," << cfg::format_double(partition.center(n))
                 << "," << cfg::format_double(partition.volume(n)) << ","
                 << cfg::format_double(report.rho_cells(n)) << ","
                 << cfg::format_double(report.rho_reference(n)) << ","
                 << cfg::format_double(report.rho_pm_errors(n)) << ","
                 << cfg::format_double(report.j_cells(n)) << ","
                 << cfg::format_double(report.j_reference(n)) << ","
                 << cfg::format_double(report.j_pm_errors(n)) << "\n";
    }
  }
  cells_file.close();
  write_records(c, out.rows);
  out.files_written.push_back(c.output_path);
  out.files_written.push_back(cells_path);
  return out;
}

inline CommandResult run_born_command(const ExperimentConfig& c) {
  validate(c);
  const std::string hash = config_hash(c);
  const SystemSetup setup = build_system(c);
  const ProtectionScheme scheme = build_scheme(c, setup);
  const HermitianObservable a = build_observable(c, setup);
  const WaveFunction psi =
      prepare_protected_state(scheme, setup.hamiltonian, setup.constants);

  detail::StopWatch watch;
  const BornSample sample =
      run_projective_measurement(a, psi, c.samples, c.seed);
  const Real reference = expectation(a, psi);

  // Histogram rows carry no timing, so identical seeds give identical bytes.
  auto hist = detail::open_output(c.output_path);
  hist << "index,eigenvalue,count,probability\n";
  for (int i = 0; i < sample.eigenvalues.size(); ++i)
    hist << i << "," << cfg::format_double(sample.eigenvalues(i)) << ","
         << sample.counts(i) << ","
         << cfg::format_double(sample.probabilities(i)) << "\n";
  hist.close();

  nlohmann::json summary = {
      {"config_hash", hash},
      {"seed", c.seed},
      {"samples", c.samples},
      {"sample_mean", sample.sample_mean},
      {"reference_expectation", reference},
  };
  const std::string summary_path = c.output_path + ".summary.json";
  auto sum = detail::open_output(summary_path);
  sum << summary.dump(2) << "\n";
  sum.close();

  ResultRecord row;
  row.config_hash = hash;
  row.pointer_shift = sample.sample_mean;
  row.reference_expectation = reference;
  row.shift_error = std::abs(sample.sample_mean - reference);
  row.wall_time_s = watch.seconds();

  CommandResult out;
  out.rows.push_back(std::move(row));
  out.files_written.push_back(c.output_path);
  out.files_written.push_back(summary_path);
  return out;
}

inline CommandResult run_eigen_command(const ExperimentConfig& c) {
  validate(c);
  const SystemSetup setup = build_system(c);
  const auto levels = eigenstates(setup.hamiltonian, c.truncation);

  CommandResult out;
  if (c.output_format == OutputFormat::Csv) {
    auto file = detail::open_output(c.output_path);
    file << "index,energy\n";
    for (std::size_t i = 0; i < levels.size(); ++i)
      file << i << "," << cfg::format_double(levels[i].energy) << "\n";
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < levels.size(); ++i)
      arr.push_back({{"index", i}, {"energy", levels[i].energy}});
    auto file = detail::open_output(c.output_path);
    file << arr.dump(2) << "\n";
  }
  out.files_written.push_back(c.output_path);
  return out;
}

}  // namespace pmsim
