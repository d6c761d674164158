#include "photocoh/oracle.hpp"

#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::oracle {

namespace {

constexpr double kNormTol = 1e-12;

std::vector<double> unit_sum(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (!(s > 0.0)) throw EmptyResultError("pattern has zero total weight");
  for (double& x : v) x /= s;
  return v;
}

// Antiderivative of |F(x)|^2 from 0: 2T [Si(xT) - (1 - cos xT)/(xT)].
double window_response_primitive(double x, double window) {
  const double z = x * window;
  if (std::abs(z) < 1e-4) return window * z * (1.0 - z * z / 36.0);
  const double si = z > 0.0 ? gsl_sf_Si(z) : -gsl_sf_Si(-z);
  return 2.0 * window * (si - (1.0 - std::cos(z)) / z);
}

}  // namespace

ModeBasis ModeBasis::uniform(double omega_lo, double omega_hi, std::size_t modes) {
  if (modes < 1 || !(omega_lo > 0.0) || (modes > 1 && !(omega_hi > omega_lo)))
    throw DomainError("ModeBasis: need modes >= 1 and 0 < omega_lo < omega_hi");
  ModeBasis b;
  b.omega.resize(modes);
  b.coeff.assign(modes, cplx{1.0, 0.0});
  if (modes == 1) {
    b.omega[0] = omega_lo;
    return b;
  }
  const double h = (omega_hi - omega_lo) / static_cast<double>(modes - 1);
  for (std::size_t k = 0; k < modes; ++k) b.omega[k] = omega_lo + h * static_cast<double>(k);
  return b;
}

void ModeBasis::validate() const {
  if (omega.empty()) throw DomainError("ModeBasis: no modes");
  if (coeff.size() != omega.size()) throw DomainError("ModeBasis: coefficient count mismatch");
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (!(omega[k] > 0.0)) throw DomainError("ModeBasis: frequencies must be positive");
    if (k > 0 && !(omega[k] > omega[k - 1])) throw DomainError("ModeBasis: frequencies must increase strictly");
  }
}

double PureState::norm2() const {
  double s = 0.0;
  for (const auto& a : amp) s += std::norm(a);
  return s;
}

void PureState::normalize() {
  const double n = std::sqrt(norm2());
  if (!(n > 0.0)) throw DomainError("PureState: zero vector");
  for (auto& a : amp) a /= n;
}

void PureState::validate(const ModeBasis& basis) const {
  if (amp.size() != basis.size()) throw DomainError("PureState: amplitude count mismatch");
  if (std::abs(norm2() - 1.0) > kNormTol) throw DomainError("PureState: not normalized");
}

void MixtureState::validate(const ModeBasis& basis) const {
  if (components.empty()) throw DomainError("MixtureState: no components");
  double s = 0.0;
  for (const auto& c : components) {
    if (!(c.p > 0.0)) throw DomainError("MixtureState: weights must be positive");
    c.state.validate(basis);
    s += c.p;
  }
  if (std::abs(s - 1.0) > kNormTol) throw DomainError("MixtureState: weights must sum to 1");
}

void TwoLevelDetector::validate() const {
  if (!(omega_ag > 0.0)) throw DomainError("TwoLevelDetector: omega_ag must be positive");
  if (!(t1 > t0)) throw DomainError("TwoLevelDetector: window must have t > t0");
}

TwoPathPropagator::TwoPathPropagator(optics::Geometry geom) : geom_(std::move(geom)) { optics::validate(geom_); }

cplx TwoPathPropagator::amplitude(double omega, double y) const {
  const double tau = optics::path_delay(geom_, y);
  if (const auto* ds = std::get_if<optics::DoubleSlit>(&geom_)) {
    double mean_path = ds->distance;
    if (!ds->small_angle)
      mean_path = 0.5 * (std::hypot(ds->distance, y + 0.5 * ds->separation) +
                         std::hypot(ds->distance, y - 0.5 * ds->separation));
    // e^{i w r1/c} + e^{i w r2/c} with the mean path factored out
    const double common = std::fmod(omega * mean_path / kSpeedOfLight, kTwoPi);
    return std::polar(2.0 * std::cos(0.5 * omega * tau), common);
  }
  return cplx{1.0, 0.0} + std::polar(1.0, omega * tau);
}

PureState lorentzian_state(const ModeBasis& basis, double omega0, double tau_c, double t_e, double support_lo,
                           double support_hi) {
  if (!(tau_c > 0.0)) throw DomainError("lorentzian_state: tau_c must be positive");
  PureState s;
  s.amp.assign(basis.size(), cplx{0.0, 0.0});
  const double g = std::isinf(tau_c) ? 0.0 : 1.0 / tau_c;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double w = basis.omega[k];
    if (w < support_lo || w > support_hi) continue;
    if (w == omega0 && g == 0.0) {
      s.amp[k] = 1.0;
      continue;
    }
    s.amp[k] = std::polar(1.0, w * t_e) / cplx{w - omega0, g};
  }
  s.normalize();
  return s;
}

ModeBasis clustered_basis(std::span<const std::pair<double, double>> ranges, std::span<const std::size_t> modes) {
  if (ranges.size() != modes.size() || ranges.empty()) throw DomainError("clustered_basis: range/mode count mismatch");
  ModeBasis b;
  for (std::size_t c = 0; c < ranges.size(); ++c) {
    const auto part = ModeBasis::uniform(ranges[c].first, ranges[c].second, modes[c]);
    b.omega.insert(b.omega.end(), part.omega.begin(), part.omega.end());
    b.coeff.insert(b.coeff.end(), part.coeff.begin(), part.coeff.end());
  }
  b.validate();
  return b;
}

cplx window_integral(double delta, double t0, double t1) {
  const double T = t1 - t0;
  const double x = delta * T;
  double sinc;
  if (std::abs(x) < 1e-6) {
    sinc = 1.0 - x * x / 24.0;
  } else {
    sinc = std::sin(0.5 * x) / (0.5 * x);
  }
  return std::polar(T * sinc, delta * t0 + 0.5 * x);
}

double window_response(double delta, double window) {
  const double x = delta * window;
  if (std::abs(x) < 1e-6) return window * window * (1.0 - x * x / 12.0);
  const double s = std::sin(0.5 * x);
  return 4.0 * s * s / (delta * delta);
}

cplx g1_corr(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop, double y, double t1,
             double t2) {
  std::vector<cplx> u(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) u[k] = basis.coeff[k] * prop.amplitude(basis.omega[k], y);
  cplx acc{0.0, 0.0};
  for (const auto& c : rho.components) {
    cplx a1{0.0, 0.0};
    cplx a2{0.0, 0.0};
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const cplx b = u[k] * c.state.amp[k];
      a1 += b * std::polar(1.0, -basis.omega[k] * t1);
      a2 += b * std::polar(1.0, -basis.omega[k] * t2);
    }
    acc += c.p * a2 * std::conj(a1);
  }
  return acc;
}

double transition_probability(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                              const TwoLevelDetector& det, double y) {
  det.validate();
  std::vector<cplx> kern(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k)
    kern[k] = basis.coeff[k] * prop.amplitude(basis.omega[k], y) *
              window_integral(det.omega_ag - basis.omega[k], det.t0, det.t1);
  double acc = 0.0;
  for (const auto& c : rho.components) {
    cplx a{0.0, 0.0};
    for (std::size_t k = 0; k < basis.size(); ++k) a += c.state.amp[k] * kern[k];
    acc += c.p * std::norm(a);
  }
  return det.dipole * det.dipole * acc;
}

double band_response(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                     const TwoLevelDetector& det, double band_half_width_omega, double y) {
  det.validate();
  if (!(band_half_width_omega > 0.0)) throw DomainError("band_response: band half-width must be positive");
  const double T = det.window();
  double acc = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double lo = det.omega_ag - band_half_width_omega - basis.omega[k];
    const double hi = det.omega_ag + band_half_width_omega - basis.omega[k];
    const double w = (window_response_primitive(hi, T) - window_response_primitive(lo, T)) / (2.0 * band_half_width_omega);
    const double u2 = std::norm(basis.coeff[k] * prop.amplitude(basis.omega[k], y));
    double mix = 0.0;
    for (const auto& c : rho.components) mix += c.p * std::norm(c.state.amp[k]);
    acc += w * u2 * mix;
  }
  return det.dipole * det.dipole * acc;
}

double in_band_mass(const PureState& state, const ModeBasis& basis, double e_lo, double e_hi) {
  double m = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double e = omega_to_energy(basis.omega[k]);
    if (e >= e_lo && e <= e_hi) m += std::norm(state.amp[k]);
  }
  return m;
}

MixtureState effective_density(const MixtureState& rho, const ModeBasis& basis, double e_s, double delta_e,
                               double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("effective_density: eps must be in (0, 1)");
  MixtureState out;
  double b = 0.0;
  for (const auto& c : rho.components) {
    if (in_band_mass(c.state, basis, e_s - delta_e, e_s + delta_e) > eps) {
      out.components.push_back(c);
      b += c.p;
    }
  }
  if (out.components.empty()) throw EmptyResultError("effective density: no component survives the band");
  for (auto& c : out.components) c.p /= b;
  return out;
}

std::vector<double> p_of_y(const MixtureState& rho_eff, const ModeBasis& basis, const TwoPathPropagator& prop,
                           std::span<const double> y_grid) {
  std::vector<double> mix(basis.size(), 0.0);
  for (const auto& c : rho_eff.components)
    for (std::size_t k = 0; k < basis.size(); ++k) mix[k] += c.p * std::norm(c.state.amp[k]);
  std::vector<double> out(y_grid.size(), 0.0);
  for (std::size_t i = 0; i < y_grid.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k)
      acc += mix[k] * std::norm(basis.coeff[k] * prop.amplitude(basis.omega[k], y_grid[i]));
    out[i] = acc;
  }
  return unit_sum(std::move(out));
}

std::vector<double> band_pattern(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                                 const TwoLevelDetector& det, double band_half_width_omega,
                                 std::span<const double> y_grid) {
  std::vector<double> out(y_grid.size());
  for (std::size_t i = 0; i < y_grid.size(); ++i)
    out[i] = band_response(rho, basis, prop, det, band_half_width_omega, y_grid[i]);
  return unit_sum(std::move(out));
}

double equivalence_check(const MixtureState& rho, const ModeBasis& basis, const TwoPathPropagator& prop,
                         const TwoLevelDetector& det, double delta_e, std::span<const double> y_grid, double eps) {
  const double e_s = omega_to_energy(det.omega_ag);
  const MixtureState eff = effective_density(rho, basis, e_s, delta_e, eps);
  const auto lhs = band_pattern(rho, basis, prop, det, energy_to_omega(delta_e), y_grid);
  const auto rhs = p_of_y(eff, basis, prop, y_grid);
  double sup = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) sup = std::max(sup, std::abs(lhs[i] - rhs[i]));
  return sup;
}

DeskScenario desk_scenario(std::size_t modes, std::size_t y_points) {
  if (modes < 8) throw DomainError("desk_scenario: need at least 8 modes");
  DeskScenario s;
  const double omega_ag = wavelength_to_omega(600e-9);
  const double period = kTwoPi / omega_ag;
  const double t0 = 1000.0 * period;
  const double unit = 1.0 / t0;
  s.detuning = 100.0 * unit;
  const double half = 40.0 * unit;
  // 80/T0 of support is 10 linewidths of 2 pi / tau_c
  const double tau_c = kTwoPi / (8.0 * unit);
  const std::array<std::pair<double, double>, 3> ranges = {{{omega_ag - s.detuning - half, omega_ag - s.detuning + half},
                                                            {omega_ag - half, omega_ag + half},
                                                            {omega_ag + s.detuning - half, omega_ag + s.detuning + half}}};
  const std::array<std::size_t, 3> counts = {modes / 4, modes - 2 * (modes / 4), modes / 4};
  s.basis = clustered_basis(ranges, counts);
  auto packet = [&](double w0, std::size_t c) {
    return lorentzian_state(s.basis, w0, tau_c, 0.0, ranges[c].first, ranges[c].second);
  };
  s.rho.components = {
      {0.35, packet(omega_ag, 1)},
      {0.35, packet(omega_ag + 10.0 * unit, 1)},
      {0.15, packet(omega_ag - s.detuning, 0)},
      {0.15, packet(omega_ag + s.detuning, 2)},
  };
  s.geometry = optics::Michelson{0.0, 1.5 * tau_c};
  s.detector = {omega_ag, 1.0, 0.0, t0};
  s.delta_e = omega_to_energy(50.0 * unit);
  s.y.resize(y_points);
  for (std::size_t i = 0; i < y_points; ++i)
    s.y[i] = 1.5 * tau_c * static_cast<double>(i) / static_cast<double>(y_points - 1);
  return s;
}

Sweep equivalence_sweep(const DeskScenario& s, std::span<const double> factors) {
  Sweep out;
  const TwoPathPropagator prop(s.geometry);
  const double t0 = s.detector.window();
  for (double f : factors) {
    TwoLevelDetector det = s.detector;
    det.t1 = det.t0 + t0 * f;
    out.rows.push_back({det.window(), equivalence_check(s.rho, s.basis, prop, det, s.delta_e, s.y, s.eps)});
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].discrepancy > out.rows[i - 1].discrepancy * (1.0 + 1e-9)) out.nonincreasing = false;
  return out;
}

}  // namespace photocoh::oracle
