#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "photocoh/engine.hpp"
#include "photocoh/spectral.hpp"

namespace photocoh::cli {

enum class Estimator { kCount, kCrossing };

struct AnalysisSettings {
  double threshold = 0.36787944117144233;
  Estimator estimator = Estimator::kCount;
};

struct CompareSettings {
  double bandwidth_hz = 0.0;
  spectral::FilterShape shape = spectral::FilterShape::kTopHat;
};

struct OracleSettings {
  std::size_t modes = 256;
  std::size_t y_points = 64;
  std::vector<double> window_factors = {1, 2, 4, 8, 16};
  double eps = 0.1;
  double detector_shift_per_t0 = 0.0;  // moves the detector resonance off the source, in units of 1/T0
};

/// Parsed experiment file. `doc` is the canonical form with every default
/// filled in; parsing `doc` again yields the same config.
struct ExperimentConfig {
  nlohmann::json doc;
  std::optional<engine::RunConfig> run;  // set when source/geometry/detector/run are present
  std::optional<spectral::GasConditions> gas;
  AnalysisSettings analysis;
  std::string output_dir = "out";
  std::vector<double> sweep_pressures;
  std::optional<CompareSettings> compare;
  OracleSettings oracle;

  /// The run configuration, or ConfigError naming the missing section.
  const engine::RunConfig& require_run() const;
  /// Canonical document without execution-only keys (run.workers); this is
  /// what output headers echo, so outputs do not depend on worker count.
  nlohmann::json experiment_echo() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Source model with the gas pressure replaced (coherence from collisions).
spectral::SourceModel source_at_pressure(const ExperimentConfig& cfg, double pressure_pa);

}  // namespace photocoh::cli
