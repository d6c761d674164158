#include "photocoh/screen.hpp"

#include <cmath>
#include <limits>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::screen {

void DetectorArray::validate() const {
  if (n_pixels < 2) throw DomainError("DetectorArray: need at least 2 pixels");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw DomainError("DetectorArray: pitch must be positive");
  if (!std::isfinite(y_min)) throw DomainError("DetectorArray: y_min must be finite");
  if (!(sigma_e >= 0.0) || !std::isfinite(sigma_e)) throw DomainError("DetectorArray: sigma_E must be >= 0");
  if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0))
    throw DomainError("DetectorArray: quantum efficiency outside [0, 1]");
}

double pixels_per_fringe(const DetectorArray& array, const optics::Geometry& geom, double omega) {
  const auto grid = array.grid();
  std::size_t mid = grid.n_pixels / 2;
  const double dtau = std::abs(optics::path_delay(geom, grid.edge(mid + 1)) - optics::path_delay(geom, grid.edge(mid)));
  if (dtau == 0.0) return std::numeric_limits<double>::infinity();
  return (kTwoPi / omega) / dtau;
}

double RegistrationBand::delta_nu() const { return half_width / kPlanck; }

void RegistrationBand::validate() const {
  if (!(center > 0.0) || !std::isfinite(center)) throw DomainError("RegistrationBand: E_s must be positive");
  if (!(half_width > 0.0)) throw DomainError("RegistrationBand: half-width must be positive");
}

RegistrationBand PhotoluminescentScreen::band() const {
  return {transition_energy, transition_width * cooling_scale};
}

void PhotoluminescentScreen::validate() const {
  if (!(cooling_scale > 0.0 && cooling_scale <= 1.0))
    throw DomainError("PhotoluminescentScreen: cooling scale must be in (0, 1]");
  band().validate();
}

EnergySample measure_energy(double e_true, const DetectorArray& array, CounterStream& stream) {
  EnergySample s{e_true, e_true};
  if (array.sigma_e > 0.0) s.e_meas = e_true + array.sigma_e * stream.normal();
  return s;
}

EnergySample measure_energy(const spectral::WavePacket& packet, const DetectorArray& array,
                            CounterStream& stream) {
  const double e0 = omega_to_energy(packet.omega0);
  const double u = stream.uniform_open();
  double e_true = e0;
  if (!std::isinf(packet.tau_c)) {
    const double gamma = kHbar / packet.tau_c;
    const double a = std::atan(e0 / gamma);
    // inverse CDF on (0, 2 E0): E = E0 + gamma * tan(-a + 2 a u)
    e_true = e0 + gamma * std::tan(a * (2.0 * u - 1.0));
  }
  return measure_energy(e_true, array, stream);
}

bool registers(const DetectionEvent& event, const RegistrationBand& band) { return band.contains(event.e_meas); }

BandwidthCheck check_bandwidth_constraint(const RegistrationBand& band, const spectral::SourceModel& source) {
  const double dnu_s = spectral::linewidth_hz(source.coherence(band.center));
  BandwidthCheck out;
  out.ratio = band.delta_nu() / dnu_s;
  // rounding slack so a band built as exactly dnu_s/10 lands on the ok side
  out.status = out.ratio > 0.1 * (1.0 + 1e-12) ? BandStatus::kWarn : BandStatus::kOk;
  return out;
}

std::string to_string(BandStatus s) { return s == BandStatus::kOk ? "ok" : "warn"; }

}  // namespace photocoh::screen
