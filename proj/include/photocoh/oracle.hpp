#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <utility>
#include <span>
#include <vector>

#include "photocoh/optics.hpp"

namespace photocoh::oracle {

using cplx = std::complex<double>;

/// Discretized scalar field modes (single polarization).
struct ModeBasis {
  std::vector<double> omega;  // strictly increasing, rad/s
  std::vector<cplx> coeff;    // C_k, default 1

  static ModeBasis uniform(double omega_lo, double omega_hi, std::size_t modes);
  std::size_t size() const { return omega.size(); }
  void validate() const;
};

/// Single-photon state: amplitude c_k on each mode.
struct PureState {
  std::vector<cplx> amp;

  double norm2() const;
  void normalize();
  void validate(const ModeBasis& basis) const;
};

struct Component {
  double p = 0.0;
  PureState state;
};

struct MixtureState {
  std::vector<Component> components;
  void validate(const ModeBasis& basis) const;
};

struct TwoLevelDetector {
  double omega_ag = 0.0;
  double dipole = 1.0;
  double t0 = 0.0;
  double t1 = 0.0;

  double window() const { return t1 - t0; }
  void validate() const;
};

/// u_k(y) for the two paths of a double slit, or 1 + e^{i w tau} for a delay line.
class TwoPathPropagator {
 public:
  explicit TwoPathPropagator(optics::Geometry geom);
  cplx amplitude(double omega, double y) const;
  const optics::Geometry& geometry() const { return geom_; }

 private:
  optics::Geometry geom_;
};

/// Lorentzian single-photon packet: c_k ~ e^{i w_k t_e} / ((w_k - w0) + i/tau_c),
/// optionally truncated to modes inside [support_lo, support_hi].
PureState lorentzian_state(const ModeBasis& basis, double omega0, double tau_c, double t_e = 0.0,
                           double support_lo = 0.0,
                           double support_hi = std::numeric_limits<double>::infinity());

/// Concatenation of uniform grids (each strictly above the previous one).
ModeBasis clustered_basis(std::span<const std::pair<double, double>> ranges, std::span<const std::size_t> modes);

/// int_{t0}^{t1} e^{i delta s} ds, with a series near delta = 0.
cplx window_integral(double delta, double t0, double t1);

/// |F(delta)|^2 = 4 sin^2(delta T / 2) / delta^2.
double window_response(double delta, double window);

/// Tr{rho E^-(y, t') E^+(y, t'')}.
cplx g1_corr(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop, double y,
             double t1, double t2);

/// Two-level excitation probability over the detector window, up to R(a).
double transition_probability(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                              const TwoLevelDetector& det, double y);

/// Emission-time averaged response of detectors spread uniformly over
/// omega_ag +- band_half_width_omega.
double band_response(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                     const TwoLevelDetector& det, double band_half_width_omega, double y);

/// Share of |c_k|^2 on modes with hbar w_k in [lo, hi].
double in_band_mass(const PureState& state, const ModeBasis& basis, double e_lo, double e_hi);

/// Components whose in-band mass exceeds eps, weights renormalized.
MixtureState effective_density(const MixtureState& rho, const ModeBasis& basis, double e_s, double delta_e,
                               double eps);

/// Stationary equal-time G1 on the grid, normalized to unit sum.
std::vector<double> p_of_y(const MixtureState& rho_eff, const ModeBasis& basis, const TwoPathPropagator& prop,
                           std::span<const double> y_grid);

/// band_response on the grid, normalized to unit sum.
std::vector<double> band_pattern(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                                 const TwoLevelDetector& det, double band_half_width_omega,
                                 std::span<const double> y_grid);

/// sup_y |band pattern of rho - p_of_y(rho_eff)| for the band hbar w_ag +- delta_e.
double equivalence_check(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                         const TwoLevelDetector& det, double delta_e, std::span<const double> y_grid, double eps);

struct DeskScenario {
  ModeBasis basis;
  MixtureState rho;
  optics::Geometry geometry;
  TwoLevelDetector detector;  // window T0
  double delta_e = 0.0;       // band half-width (J)
  std::vector<double> y;
  double eps = 0.1;
  double detuning = 0.0;      // off-band component offset (rad/s)
};

/// Four-component desk-scale setup at 600 nm with T0 = 1000 optical periods:
/// two Lorentzian packets inside the band E_s +- hbar 50/T0 and two detuned by
/// +-100/T0. Each packet lives on its own mode cluster spanning 10 linewidths
/// (half of `modes` in the central cluster, a quarter in each detuned one).
DeskScenario desk_scenario(std::size_t modes = 256, std::size_t y_points = 64);

struct SweepRow {
  double window = 0.0;
  double discrepancy = 0.0;
};

struct Sweep {
  std::vector<SweepRow> rows;
  bool nonincreasing = true;
};

/// equivalence_check at window T0 * f for each factor f.
Sweep equivalence_sweep(const DeskScenario& s, std::span<const double> factors);

}  // namespace photocoh::oracle
