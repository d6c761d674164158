#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "photocoh/rng.hpp"

namespace photocoh::spectral {

/// One photon's pure-state wave train. The envelope is one-sided
/// exponential, so |g1(tau)| = exp(-|tau|/tau_c) and the spectrum is a
/// Lorentzian with HWHM 1/tau_c.
struct WavePacket {
  double omega0 = 0.0;  ///< carrier angular frequency (rad/s)
  double tau_c = 0.0;   ///< coherence time (s), may be +inf
  double t_e = 0.0;     ///< emission time (s)
  double phi = 0.0;     ///< global phase in [0, 2pi)

  double wavelength() const;
  double coherence_length() const;
  void validate() const;
};

/// Discrete spectral line (delta weight at `energy`).
struct SpectralLine {
  double energy = 0.0;  // J
  double weight = 1.0;
};

/// Piecewise-linear density tabulated on strictly increasing energies.
struct SpectralTable {
  std::vector<double> energy;   // J
  std::vector<double> density;  // arbitrary scale, normalized on construction
  double weight = 1.0;
};

/// Normalized spectral weight over photon energy: a weighted mixture of
/// lines and piecewise-linear tables. Sampling is exact inverse-CDF.
class SpectralWeight {
 public:
  using Part = std::variant<SpectralLine, SpectralTable>;

  SpectralWeight() = default;
  explicit SpectralWeight(std::vector<Part> parts);

  static SpectralWeight line(double energy);
  static SpectralWeight flat(double e_min, double e_max);

  const std::vector<Part>& parts() const { return parts_; }
  double e_min() const { return e_min_; }
  double e_max() const { return e_max_; }
  double mean_energy() const;

  /// Probability mass in [lo, hi] (lines count when lo <= E <= hi).
  double mass(double lo, double hi) const;

  /// Energy from two independent uniforms: one picks the part, the other
  /// inverts its CDF.
  double sample(double u_part, double u_energy) const;

 private:
  std::vector<Part> parts_;
  std::vector<double> part_cdf_;
  std::vector<std::vector<double>> table_cdf_;
  double e_min_ = 0.0;
  double e_max_ = 0.0;
};

/// tau_c(E) = tau_ref * (E / energy_ref)^exponent.
struct CoherenceLaw {
  double tau_ref = 1e-9;
  double energy_ref = 1.0;
  double exponent = 0.0;

  double operator()(double energy) const;
};

struct SourceModel {
  SpectralWeight weight;
  CoherenceLaw coherence;
  double doppler_sigma = 0.0;  ///< Gaussian carrier spread (rad/s)

  void validate() const;
};

struct GasConditions {
  double pressure = 0.0;       // Pa
  double temperature = 0.0;    // K
  double particle_mass = 0.0;  // kg
  double cross_section = 0.0;  // m^2

  /// Conditions for a given mass density (kg/m^3) via ideal-gas pressure.
  static GasConditions from_mass_density(double rho, double temperature, double particle_mass,
                                         double cross_section);
  double number_density() const;
  double mean_relative_speed() const;
  void validate() const;
};

/// Hard-sphere collision rate n * sigma * v_rel (1/s).
double collision_rate(const GasConditions& gas);

/// Collisional coherence time 1/nu (s).
double collisional_coherence_time(const GasConditions& gas);

enum class FilterShape { kTopHat, kLorentzian, kGaussian };

/// Optical transmission filter. `bandwidth_hz` is the full width of the
/// top-hat, or the intensity FWHM for the Lorentzian and Gaussian shapes.
struct FilterSpec {
  double center_energy = 0.0;  // J
  double bandwidth_hz = 0.0;
  FilterShape shape = FilterShape::kTopHat;

  /// |T|^2 at angular frequency omega.
  double transmission(double omega) const;
  /// Cell-averaged |T|^2 over [omega - h/2, omega + h/2]; exact for the top-hat.
  double cell_transmission(double omega, double h) const;
  double center_omega() const;
  double half_width_omega() const;
  /// True when the filter's |T|^2 is identically 1 (bandwidth = inf).
  bool is_identity() const;
  void validate() const;
};

/// Draws one pure-state packet from the source mixture.
WavePacket sample_packet(const SourceModel& source, CounterStream& stream);

/// Single-packet complex degree of coherence exp(-|tau|/tau_c - i omega0 tau).
std::complex<double> g1(const WavePacket& packet, double tau);

/// Voigt envelope exp(-|tau|/tau_c - sigma^2 tau^2 / 2).
double g1_envelope(double tau, double tau_c, double doppler_sigma);

/// Ensemble degree of coherence of the whole source.
std::complex<double> g1(const SourceModel& source, double tau);

/// Lorentzian linewidth in Hz under the convention dnu = 1/tau.
inline double linewidth_hz(double tau_c) { return 1.0 / tau_c; }

struct SpectralGridOptions {
  std::size_t points = 1u << 14;
  double half_span_linewidths = 12.0;  ///< beyond the support, in units of 1/tau_c (Hz)
};

/// Filtered spectral density S(omega)|T(omega)|^2 on a uniform grid, with the
/// Lorentzian 1/delta^2 tails beyond the grid folded in analytically using
/// the edge transmission. Correlations use g(tau) = int S|T|^2 e^{-i w tau} / int S|T|^2.
class FilteredSpectrum {
 public:
  FilteredSpectrum(const SourceModel& source, const FilterSpec& filter,
                   const SpectralGridOptions& options = {});
  /// Single packet (Lorentzian centred on omega0).
  FilteredSpectrum(const WavePacket& packet, const FilterSpec& filter,
                   const SpectralGridOptions& options);

  std::complex<double> correlation(double tau) const;
  std::vector<std::complex<double>> correlation(std::span<const double> taus) const;

  /// Transmitted share of the (unfiltered, tail-inclusive) spectral mass.
  double transmitted_fraction() const { return transmitted_ / total_; }
  double reference_omega() const { return omega_ref_; }
  /// Angular frequency drawn from the filtered density on the grid.
  double sample_omega(double u) const;

  std::span<const double> omega() const { return omega_; }
  std::span<const double> density() const { return filtered_; }

 private:
  void finish(const FilterSpec& filter, double tail_coefficient_left, double tail_coefficient_right);
  std::complex<double> raw_transform(double tau) const;

  std::vector<double> omega_;
  std::vector<double> filtered_;
  std::vector<double> cdf_;
  double step_ = 0.0;
  double omega_ref_ = 0.0;
  double tail_left_ = 0.0;   // coefficient A of A/x^2 beyond the left edge, times |T|^2
  double tail_right_ = 0.0;
  double transmitted_ = 0.0;
  double total_ = 0.0;
};

/// |g1(tau)| of the optically filtered source at each tau.
std::vector<double> filtered_g1(const SourceModel& source, const FilterSpec& filter,
                                std::span<const double> tau_grid,
                                const SpectralGridOptions& options = {});

}  // namespace photocoh::spectral
