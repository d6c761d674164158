#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "photocoh/optics.hpp"
#include "photocoh/screen.hpp"
#include "photocoh/spectral.hpp"

namespace photocoh::engine {

struct DetectionsFilterMode {
  std::vector<screen::RegistrationBand> bands;
};

/// Filter in the light path, broadband screen behind it.
struct OpticalFilterMode {
  spectral::FilterSpec filter;
};

struct PhotoluminescentMode {
  screen::PhotoluminescentScreen screen;
};

using Mode = std::variant<DetectionsFilterMode, OpticalFilterMode, PhotoluminescentMode>;

struct RunConfig {
  spectral::SourceModel source;
  optics::Geometry geometry = optics::DoubleSlit{};
  screen::DetectorArray array;
  Mode mode = DetectionsFilterMode{};
  std::uint64_t n_photons = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool record_events = false;

  void validate() const;
};

struct FringePattern {
  screen::RegistrationBand band;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_registered = 0;
  std::uint64_t n_incident = 0;
  bool empty = false;

  double acceptance_fraction() const;
};

struct BandReport {
  screen::BandwidthCheck check;
  double acceptance_fraction = 0.0;
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::uint64_t n_photons = 0;
  std::uint64_t n_incident = 0;
  double transmitted_fraction = 1.0;  // optical mode only
  std::vector<BandReport> bands;
  std::vector<std::string> warnings;
};

struct RunResult {
  std::vector<FringePattern> patterns;
  std::vector<std::vector<screen::DetectionEvent>> events;  // per pattern, photon order
  RunMetadata metadata;
};

/// Photon-by-photon Monte Carlo. Output is a pure function of the config
/// and seed; `workers` only changes wall time.
RunResult run(const RunConfig& config);

/// Broadband run of the source restricted to photons whose absorbed energy
/// E_true lies in `band`.
FringePattern subset_source_run(const RunConfig& config, const screen::RegistrationBand& band);

/// Registration bands implied by the mode.
std::vector<screen::RegistrationBand> mode_bands(const RunConfig& config);

}  // namespace photocoh::engine
