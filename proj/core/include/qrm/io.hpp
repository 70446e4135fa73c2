#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrm/compare.hpp"
#include "qrm/dynamics.hpp"
#include "qrm/lattice.hpp"
#include "qrm/models.hpp"

namespace qrm {

enum class Command { Params, Spectrum, LatticeSpectrum, Compare, Sweep, Evolve };
enum class OutputFormat { Csv, Json, Both };

std::string_view to_string(Command c);
Command command_from_string(std::string_view name);
std::string_view to_string(OutputFormat f);
OutputFormat format_from_string(std::string_view name);

struct LatticeScenario {
  LatticeConfig config;
  int n_points = kDefaultGridPoints;
  Grid grid() const { return Grid::site(config, n_points); }
};

struct SpectrumSettings {
  int n_states = 10;
  bool converge_cutoff = false;
  double cutoff_tol = 1e-10;
  SolverMethod method = SolverMethod::Auto;
};

struct CompareSettings {
  ComparisonOptions options;
  std::optional<double> ratio;  // tune B_x to this g_eff / omega_eff first
  bool resonance = true;        // with ratio: B_z from omega0 = omega_eff
};

struct SweepSettings {
  std::vector<double> ratios;
  std::vector<double> depths;
  std::optional<double> Bz;
};

enum class EvolveMode { Protocol, Ramp };

struct EvolveSettings {
  EvolveMode mode = EvolveMode::Protocol;
  QuenchProtocol protocol;
  double sample_rate = 0.0;
  ModelParams ramp_to;
  double total_time = 0.0;
  int n_steps = 100;
};

// A fully resolved run description. `canonical` is the resolved scenario as
// JSON with sorted keys; parsing it again reproduces it byte for byte.
struct Scenario {
  Command command = Command::Params;
  std::string output;
  OutputFormat format = OutputFormat::Csv;
  std::optional<std::string> dump_matrix;

  std::optional<ModelParams> model;
  std::optional<LatticeScenario> lattice;
  SpectrumSettings spectrum;
  CompareSettings compare;
  SweepSettings sweep;
  EvolveSettings evolve;

  std::string canonical;
};

// Builds a Scenario from scenario text (JSON object, or flat `a.b = value`
// lines) plus `key=value` overrides, which win over the text. Unknown and
// missing keys raise ValidationError naming the key. A "command" entry in
// the text must agree with `command`.
Scenario parse_scenario_text(std::string_view text, Command command, const std::vector<std::string>& overrides = {});
// As above; an empty path means no scenario file. Unreadable files raise IoError.
Scenario parse_scenario(const std::string& path, Command command, const std::vector<std::string>& overrides = {});

// Key reference for --help.
std::string scenario_key_help();

// Runs the scenario and writes its outputs; returns the paths written.
// A short human-readable summary goes to `log`.
std::vector<std::string> run_scenario(const Scenario& scenario, std::ostream& log);

// Emission helpers (used by run_scenario). Floats are written with 17
// significant digits; identical inputs give byte-identical files.
std::string format_double(double v);
std::vector<std::string> emit_comparison(const std::vector<ComparisonReport>& reports, const Scenario& scenario);
std::vector<std::string> emit_evolution(const EvolutionResult& result, const Scenario& scenario);

}  // namespace qrm
