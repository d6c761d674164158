#pragma once

#include <numbers>

namespace photocoh {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kPlanck = 6.62607015e-34;           // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
inline constexpr double kElectronVolt = 1.602176634e-19;    // J
inline constexpr double kHydrogenMass = 1.6735575e-27;      // kg (H atom)
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double ev_to_joule(double ev) { return ev * kElectronVolt; }
inline constexpr double joule_to_ev(double j) { return j / kElectronVolt; }
inline constexpr double energy_to_omega(double e) { return e / kHbar; }
inline constexpr double omega_to_energy(double w) { return w * kHbar; }
inline constexpr double wavelength_to_omega(double lambda) { return kTwoPi * kSpeedOfLight / lambda; }
inline constexpr double omega_to_wavelength(double w) { return kTwoPi * kSpeedOfLight / w; }

}  // namespace photocoh
