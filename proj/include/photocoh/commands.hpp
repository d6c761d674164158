#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "photocoh/analysis.hpp"
#include "photocoh/config.hpp"

namespace photocoh::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitEmpty = 3, kExitInvariant = 4 };

/// Shortest round-trip decimal form ("inf" for infinity).
std::string format_number(double x);

/// Applies --seed / --workers to both the typed config and its document.
void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<unsigned> workers);

struct BandSummary {
  analysis::VisibilityProfile profile;
  bool have_profile = false;
  analysis::FringeCount count;
  std::optional<analysis::CoherenceEstimate> estimate;
  std::optional<analysis::VoigtFit> fit;
  std::string note;
};

BandSummary summarize_band(std::span<const double> counts, const screen::RegistrationBand& band,
                           const optics::Geometry& geom, const optics::PixelGrid& grid,
                           const AnalysisSettings& settings);

struct CompareReport {
  double tau_source = 0.0;
  double tau_optical = 0.0;  // lower bound when the envelope is not reached
  double tau_detections = 0.0;
  bool optical_reached = false;
  bool detections_reached = false;
  std::uint64_t optical_registered = 0;
  std::uint64_t detections_registered = 0;
};

struct SweepPoint {
  double pressure = 0.0;
  double tau_c = 0.0;
  double n_f = 0.0;
  double tau_s = 0.0;
  bool envelope_reached = false;
};

struct SweepReport {
  std::vector<SweepPoint> points;  // ascending pressure
  bool monotone = true;
  double r2 = 0.0;  // tau_s against 1/P
};

CompareReport run_compare(const ExperimentConfig& cfg, const std::string& out_dir);
SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<double>& pressures, const std::string& out_dir);

int simulate(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);
int compare_filters(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);
int sweep(const ExperimentConfig& cfg, const std::vector<double>& pressures, const std::string& out_dir,
          std::ostream& log);
int oracle(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);
/// Re-analyzes histogram files; with no inputs, every histogram_band*.tsv in out_dir.
int analyze(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, const std::string& out_dir,
            std::ostream& log);

}  // namespace photocoh::cli
