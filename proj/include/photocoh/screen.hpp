#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "photocoh/optics.hpp"
#include "photocoh/rng.hpp"
#include "photocoh/spectral.hpp"

namespace photocoh::screen {

struct DetectorArray {
  std::size_t n_pixels = 256;
  double pitch = 0.0;  // m (s for a Michelson)
  double y_min = 0.0;
  double sigma_e = 0.0;  // J
  double quantum_efficiency = 1.0;

  optics::PixelGrid grid() const { return {n_pixels, pitch, y_min}; }
  void validate() const;
};

/// Pixels per carrier period at the screen centre, measured in delay.
double pixels_per_fringe(const DetectorArray& array, const optics::Geometry& geom, double omega);

/// Energy window E_s +- delta_e. Closed at both ends.
struct RegistrationBand {
  double center = 0.0;      // J
  double half_width = 0.0;  // J, may be +inf (register everything)

  double delta_nu() const;  // half_width / h
  bool contains(double energy) const { return std::abs(energy - center) <= half_width; }
  void validate() const;
};

struct DetectionEvent {
  std::size_t pixel = 0;
  double y = 0.0;
  double e_true = 0.0;
  double e_meas = 0.0;
  std::uint64_t packet_id = 0;
};

/// Two-level photoluminescent layer. Cooling narrows the effective width
/// by `cooling_scale` (1 = no cooling).
struct PhotoluminescentScreen {
  double transition_energy = 0.0;
  double transition_width = 0.0;
  double cooling_scale = 1.0;

  RegistrationBand band() const;
  void validate() const;
};

struct EnergySample {
  double e_true = 0.0;
  double e_meas = 0.0;
};

/// E_true from the packet's Lorentzian (HWHM hbar/tau_c) truncated to
/// (0, 2 hbar omega0); E_meas adds Gaussian detector noise.
EnergySample measure_energy(const spectral::WavePacket& packet, const DetectorArray& array,
                            CounterStream& stream);

/// Noise-only variant for an externally drawn absorbed energy.
EnergySample measure_energy(double e_true, const DetectorArray& array, CounterStream& stream);

bool registers(const DetectionEvent& event, const RegistrationBand& band);

enum class BandStatus { kOk, kWarn };

struct BandwidthCheck {
  BandStatus status = BandStatus::kOk;
  double ratio = 0.0;  // dnu_d / dnu_s
};

/// Warns when dnu_d > dnu_s / 10 with dnu_s = 1 / tau_c(E_s).
BandwidthCheck check_bandwidth_constraint(const RegistrationBand& band, const spectral::SourceModel& source);

std::string to_string(BandStatus s);

}  // namespace photocoh::screen
