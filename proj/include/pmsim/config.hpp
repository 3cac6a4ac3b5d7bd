#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmsim/coupling.hpp"
#include "pmsim/grid.hpp"

namespace pmsim {

enum class SystemKind { Box, Harmonic, Ring };
enum class SchemeKind { ProtectivePotential, Zeno };
enum class ObservableKind {
  Identity,
  Position,
  PositionSquared,
  CellProjector,
  Current
};
enum class ZenoTargetKind { Level, Winding };
enum class SweepParameter { T, NSteps, ZenoM, Cells };
enum class OutputFormat { Csv, Json };

// Declarative description of one experiment: the measured system, the
// protection scheme, the observable, pointer and time discretizations, an
// optional one-parameter sweep, and the output sink. Plain `key = value`
// sections; parse and serialize round-trip exactly.
struct ExperimentConfig {
  // [system]
  SystemKind system = SystemKind::Harmonic;
  double length = 12.0;  // box/harmonic domain [-L/2, L/2]; ring domain [0, L)
  double omega = 1.0;    // harmonic only
  double flux = 0.0;     // ring only, in flux quanta

  // [grid]
  int n_points = 256;

  // [scheme]
  SchemeKind scheme = SchemeKind::ProtectivePotential;
  int level = 0;
  ZenoTargetKind zeno_target = ZenoTargetKind::Level;
  int zeno_target_index = 0;
  int projections = 16;
  int truncation = 8;

  // [observable]
  ObservableKind observable = ObservableKind::Identity;
  int cell_index = 0;
  int cells = 64;

  // [pointer]
  Boundary pointer_boundary = Boundary::Ring;
  double pointer_x_min = -2.4;
  double pointer_x_max = 3.0;
  int pointer_n_points = 312;
  double pointer_center = 0.0;
  double pointer_sigma = 0.4;
  double pointer_mass = std::numeric_limits<double>::infinity();

  // [time]
  double t_total = 10.0;
  int n_steps = 640;
  CouplingShape coupling = CouplingShape::RaisedCosine;
  int trace_stride = 1;

  // [run]
  std::uint64_t seed = 1;
  int samples = 100000;
  int threads = 0;

  // [sweep]
  bool has_sweep = false;
  SweepParameter sweep_parameter = SweepParameter::T;
  std::vector<double> sweep_values;

  // [output]
  std::string output_path = "pmsim_out.csv";
  OutputFormat output_format = OutputFormat::Csv;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace cfg {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest representation that round-trips exactly.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& field) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field + " is not a number (got '" + s + "')");
  }
}

inline int parse_int(const std::string& s, const std::string& field) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError(field + " is not an integer (got '" + s + "')");
  }
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& field) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field + " is not a non-negative integer (got '" + s +
                      "')");
  }
}

inline std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_enum(const std::string& s, const std::string& field,
             std::initializer_list<std::pair<const char*, T>> table) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  std::string options;
  for (const auto& [name, value] : table) {
    if (!options.empty()) options += ", ";
    options += name;
  }
  throw ConfigError(field + " must be one of {" + options + "} (got '" + s +
                    "')");
}

}  // namespace cfg

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::Box: return "box";
    case SystemKind::Harmonic: return "harmonic";
    case SystemKind::Ring: return "ring";
  }
  return "?";
}
inline std::string to_string(SchemeKind k) {
  return k == SchemeKind::ProtectivePotential ? "protective_potential"
                                              : "zeno";
}
inline std::string to_string(ObservableKind k) {
  switch (k) {
    case ObservableKind::Identity: return "identity";
    case ObservableKind::Position: return "position";
    case ObservableKind::PositionSquared: return "position_squared";
    case ObservableKind::CellProjector: return "cell_projector";
    case ObservableKind::Current: return "current";
  }
  return "?";
}
inline std::string to_string(ZenoTargetKind k) {
  return k == ZenoTargetKind::Level ? "level" : "winding";
}
inline std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::T: return "T";
    case SweepParameter::NSteps: return "n_steps";
    case SweepParameter::ZenoM: return "zeno_M";
    case SweepParameter::Cells: return "cells";
  }
  return "?";
}
inline std::string to_string(OutputFormat f) {
  return f == OutputFormat::Csv ? "csv" : "json";
}
inline std::string to_string(Boundary b) {
  return b == Boundary::Box ? "box" : "ring";
}

// Canonical text form: fixed section and key order, %.17g numbers, so the
// serialization doubles as the hash preimage.
inline std::string serialize(const ExperimentConfig& c) {
  using cfg::format_double;
  std::ostringstream out;
  out << "[system]\n";
  out << "kind = " << to_string(c.system) << "\n";
  out << "length = " << format_double(c.length) << "\n";
  out << "omega = " << format_double(c.omega) << "\n";
  out << "flux = " << format_double(c.flux) << "\n";
  out << "[grid]\n";
  out << "n_points = " << c.n_points << "\n";
  out << "[scheme]\n";
  out << "kind = " << to_string(c.scheme) << "\n";
  out << "level = " << c.level << "\n";
  out << "target = " << to_string(c.zeno_target) << ":" << c.zeno_target_index
      << "\n";
  out << "projections = " << c.projections << "\n";
  out << "truncation = " << c.truncation << "\n";
  out << "[observable]\n";
  out << "kind = " << to_string(c.observable) << "\n";
  out << "cell_index = " << c.cell_index << "\n";
  out << "cells = " << c.cells << "\n";
  out << "[pointer]\n";
  out << "boundary = " << to_string(c.pointer_boundary) << "\n";
  out << "x_min = " << format_double(c.pointer_x_min) << "\n";
  out << "x_max = " << format_double(c.pointer_x_max) << "\n";
  out << "n_points = " << c.pointer_n_points << "\n";
  out << "center = " << format_double(c.pointer_center) << "\n";
  out << "sigma = " << format_double(c.pointer_sigma) << "\n";
  out << "mass = " << format_double(c.pointer_mass) << "\n";
  out << "[time]\n";
  out << "T = " << format_double(c.t_total) << "\n";
  out << "n_steps = " << c.n_steps << "\n";
  out << "coupling = " << coupling_shape_name(c.coupling) << "\n";
  out << "trace_stride = " << c.trace_stride << "\n";
  out << "[run]\n";
  out << "seed = " << c.seed << "\n";
  out << "samples = " << c.samples << "\n";
  out << "threads = " << c.threads << "\n";
  if (c.has_sweep) {
    out << "[sweep]\n";
    out << "parameter = " << to_string(c.sweep_parameter) << "\n";
    out << "values =";
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i)
      out << (i ? ", " : " ") << format_double(c.sweep_values[i]);
    out << "\n";
  }
  out << "[output]\n";
  out << "path = " << c.output_path << "\n";
  out << "format = " << to_string(c.output_format) << "\n";
  return out.str();
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = cfg::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      section = cfg::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value, got '" + line + "'");
    const std::string key = cfg::trim(line.substr(0, eq));
    const std::string value = cfg::trim(line.substr(eq + 1));
    const std::string field = section + "." + key;
    using namespace cfg;

    if (section == "system") {
      if (key == "kind")
        c.system = parse_enum<SystemKind>(value, field,
                                          {{"box", SystemKind::Box},
                                           {"harmonic", SystemKind::Harmonic},
                                           {"ring", SystemKind::Ring}});
      else if (key == "length") c.length = parse_double(value, field);
      else if (key == "omega") c.omega = parse_double(value, field);
      else if (key == "flux") c.flux = parse_double(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "grid") {
      if (key == "n_points") c.n_points = parse_int(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "scheme") {
      if (key == "kind")
        c.scheme = parse_enum<SchemeKind>(
            value, field,
            {{"protective_potential", SchemeKind::ProtectivePotential},
             {"zeno", SchemeKind::Zeno}});
      else if (key == "level") c.level = parse_int(value, field);
      else if (key == "target") {
        const auto colon = value.find(':');
        if (colon == std::string::npos)
          throw ConfigError(field + " must look like level:N or winding:W");
        c.zeno_target = parse_enum<ZenoTargetKind>(
            cfg::trim(value.substr(0, colon)), field,
            {{"level", ZenoTargetKind::Level},
             {"winding", ZenoTargetKind::Winding}});
        c.zeno_target_index =
            parse_int(cfg::trim(value.substr(colon + 1)), field);
      } else if (key == "projections") c.projections = parse_int(value, field);
      else if (key == "truncation") c.truncation = parse_int(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "observable") {
      if (key == "kind")
        c.observable = parse_enum<ObservableKind>(
            value, field,
            {{"identity", ObservableKind::Identity},
             {"position", ObservableKind::Position},
             {"position_squared", ObservableKind::PositionSquared},
             {"cell_projector", ObservableKind::CellProjector},
             {"current", ObservableKind::Current}});
      else if (key == "cell_index") c.cell_index = parse_int(value, field);
      else if (key == "cells") c.cells = parse_int(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "pointer") {
      if (key == "boundary")
        c.pointer_boundary = parse_enum<Boundary>(
            value, field, {{"box", Boundary::Box}, {"ring", Boundary::Ring}});
      else if (key == "x_min") c.pointer_x_min = parse_double(value, field);
      else if (key == "x_max") c.pointer_x_max = parse_double(value, field);
      else if (key == "n_points") c.pointer_n_points = parse_int(value, field);
      else if (key == "center") c.pointer_center = parse_double(value, field);
      else if (key == "sigma") c.pointer_sigma = parse_double(value, field);
      else if (key == "mass") c.pointer_mass = parse_double(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "time") {
      if (key == "T") c.t_total = parse_double(value, field);
      else if (key == "n_steps") c.n_steps = parse_int(value, field);
      else if (key == "coupling")
        c.coupling = parse_enum<CouplingShape>(
            value, field,
            {{"raised_cosine", CouplingShape::RaisedCosine},
             {"smooth_bump", CouplingShape::SmoothBump}});
      else if (key == "trace_stride") c.trace_stride = parse_int(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "run") {
      if (key == "seed") c.seed = parse_u64(value, field);
      else if (key == "samples") c.samples = parse_int(value, field);
      else if (key == "threads") c.threads = parse_int(value, field);
      else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "sweep") {
      c.has_sweep = true;
      if (key == "parameter")
        c.sweep_parameter = parse_enum<SweepParameter>(
            value, field,
            {{"T", SweepParameter::T},
             {"n_steps", SweepParameter::NSteps},
             {"zeno_M", SweepParameter::ZenoM},
             {"cells", SweepParameter::Cells}});
      else if (key == "values") {
        c.sweep_values.clear();
        std::string item;
        std::istringstream vs(value);
        while (std::getline(vs, item, ',')) {
          item = cfg::trim(item);
          if (!item.empty())
            c.sweep_values.push_back(parse_double(item, field));
        }
      } else throw ConfigError("unknown key '" + field + "'");
    } else if (section == "output") {
      if (key == "path") c.output_path = value;
      else if (key == "format")
        c.output_format = parse_enum<OutputFormat>(
            value, field,
            {{"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}});
      else throw ConfigError("unknown key '" + field + "'");
    } else {
      throw ConfigError("unknown section '[" + section + "]'");
    }
  }
  return c;
}

// Field-level sanity checks with messages naming the offending key. The
// numerical layers re-validate their own invariants on construction.
inline void validate(const ExperimentConfig& c) {
  if (!(c.length > 0.0)) throw ConfigError("system.length must be positive");
  if (c.system == SystemKind::Harmonic && !(c.omega > 0.0))
    throw ConfigError("system.omega must be positive");
  if (c.flux != 0.0 && c.system != SystemKind::Ring)
    throw ConfigError("system.flux requires system.kind = ring");
  if (c.n_points < 8) throw ConfigError("grid.n_points must be at least 8");
  if (c.level < 0) throw ConfigError("scheme.level must be non-negative");
  if (c.projections < 1)
    throw ConfigError("scheme.projections must be at least 1");
  if (c.truncation < 2 || c.truncation > 16)
    throw ConfigError("scheme.truncation must lie in [2, 16]");
  if (c.scheme == SchemeKind::Zeno &&
      c.zeno_target == ZenoTargetKind::Winding &&
      c.system != SystemKind::Ring)
    throw ConfigError("scheme.target winding:W requires system.kind = ring");
  if (c.cells < 1) throw ConfigError("observable.cells must be at least 1");
  if (c.cell_index < 0 || c.cell_index >= c.cells)
    throw ConfigError("observable.cell_index must lie in [0, cells)");
  if (!(c.pointer_x_max > c.pointer_x_min))
    throw ConfigError("pointer.x_max must exceed pointer.x_min");
  if (c.pointer_n_points < 8)
    throw ConfigError("pointer.n_points must be at least 8");
  if (!(c.pointer_sigma > 0.0))
    throw ConfigError("pointer.sigma must be positive");
  if (!(c.pointer_mass > 0.0))
    throw ConfigError("pointer.mass must be positive");
  if (!(c.t_total > 0.0)) throw ConfigError("time.T must be positive");
  if (c.n_steps < 16) throw ConfigError("time.n_steps must be at least 16");
  if (c.trace_stride < 0)
    throw ConfigError("time.trace_stride must be non-negative");
  if (c.samples < 1) throw ConfigError("run.samples must be at least 1");
  if (c.threads < 0) throw ConfigError("run.threads must be non-negative");
  if (c.has_sweep) {
    if (c.sweep_values.empty())
      throw ConfigError("sweep.values must not be empty");
    for (std::size_t i = 1; i < c.sweep_values.size(); ++i)
      if (!(c.sweep_values[i] > c.sweep_values[i - 1]))
        throw ConfigError("sweep.values must be strictly increasing");
  }
  if (c.output_path.empty()) throw ConfigError("output.path must not be empty");
}

// FNV-1a over the canonical serialization.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = serialize(c);
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pmsim
