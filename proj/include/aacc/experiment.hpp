#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aacc/config.hpp"
#include "aacc/simulator.hpp"

namespace aacc {

/// Batch experiment definition: the scenario matrix plus output options.
struct ExperimentConfig {
  SimMode mode = SimMode::kFunctionValidation;
  std::vector<DrivingStyle> styles{DrivingStyle::kConservative,
                                   DrivingStyle::kAggressive};
  std::vector<double> gaps{10.0, 20.0, 30.0};
  std::vector<ControllerType> controllers{ControllerType::kAacc,
                                          ControllerType::kBaseline};
  std::vector<double> vc_ratios{0.2, 0.4, 0.6, 0.8};
  int seeds = 10;
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  bool plots = false;
  int jobs = 1;
  Scenario scenario;  ///< base scenario; overrides applied on top

  static ExperimentConfig from_ini(const IniDocument& doc);
  IniDocument to_ini() const;
};

/// Apply a named override to a scenario field ("dt", "road_length", ...).
/// Returns false for unknown keys.
bool apply_scenario_override(Scenario& sc, const std::string& key,
                             const std::string& value);

struct RunSpec {
  std::string name;
  Scenario scenario;
};

/// Expand the config into the concrete scenario matrix, in deterministic
/// order.
std::vector<RunSpec> expand_matrix(const ExperimentConfig& cfg);

struct RunManifest {
  struct Entry {
    std::string name;
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    std::string csv_path;
    std::string metrics_path;
    double wall_ms = 0.0;
    bool ok = false;
    bool collision = false;
    std::string error;
  };
  std::string out_dir;
  SimMode mode = SimMode::kFunctionValidation;
  std::vector<Entry> entries;
  std::vector<std::string> aggregate_files;
  std::string artifact_version;

  std::string to_json() const;
  void save(const std::string& path) const;
};

/// FNV-1a hash of the serialized scenario, recorded per run.
std::uint64_t scenario_hash(const Scenario& sc);

/// Execute every cell of the matrix, write per-run CSV + metrics JSON and
/// the aggregate comparison tables. Per-cell failures are recorded in the
/// manifest and do not abort the remaining cells.
RunManifest run_matrix(const ExperimentConfig& cfg);

/// Render static SVG plots for every successful run in the manifest plus
/// the aggregate charts. Missing run data skips that plot with a notice.
/// Returns the emitted file paths.
std::vector<std::string> emit_plots(const RunManifest& manifest);

/// Exit-code policy: all requested cells ran, and no aacc run collided in
/// function-validation mode.
bool manifest_acceptable(const RunManifest& manifest);

}  // namespace aacc
