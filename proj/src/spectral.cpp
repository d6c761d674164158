#include "photocoh/spectral.hpp"

#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::spectral {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double table_segment_mass(double f0, double f1, double h) { return 0.5 * (f0 + f1) * h; }

// Mass of a piecewise-linear table in [lo, hi], in the table's own scale.
double table_mass(const SpectralTable& t, double lo, double hi) {
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < t.energy.size(); ++k) {
    const double a = std::max(lo, t.energy[k]);
    const double b = std::min(hi, t.energy[k + 1]);
    if (b <= a) continue;
    const double h = t.energy[k + 1] - t.energy[k];
    const double s = (t.density[k + 1] - t.density[k]) / h;
    const double fa = t.density[k] + s * (a - t.energy[k]);
    const double fb = t.density[k] + s * (b - t.energy[k]);
    m += table_segment_mass(fa, fb, b - a);
  }
  return m;
}

// 4-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGlNodes = {-0.8611363115940526, -0.3399810435848563,
                                            0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGlWeights = {0.3478548451374538, 0.6521451548625461,
                                              0.6521451548625461, 0.3478548451374538};

// int_X^inf e^{-i x tau} / x^2 dx for X > 0.
std::complex<double> tail_transform(double x_edge, double tau) {
  if (tau == 0.0) return {1.0 / x_edge, 0.0};
  const double s = std::abs(tau);
  const double z = x_edge * s;
  const double c = std::cos(z) / x_edge - s * (0.5 * std::numbers::pi - gsl_sf_Si(z));
  const double sn = std::sin(z) / x_edge - s * gsl_sf_Ci(z);
  return {c, -std::copysign(1.0, tau) * sn};
}

}  // namespace

// ---------------------------------------------------------------- WavePacket

double WavePacket::wavelength() const { return omega_to_wavelength(omega0); }

double WavePacket::coherence_length() const { return kSpeedOfLight * tau_c; }

void WavePacket::validate() const {
  if (!positive_finite(omega0)) throw DomainError("WavePacket: omega0 must be positive");
  if (!(tau_c > 0.0)) throw DomainError("WavePacket: tau_c must be positive");
  if (!(phi >= 0.0 && phi < kTwoPi)) throw DomainError("WavePacket: phi outside [0, 2pi)");
}

// ------------------------------------------------------------ SpectralWeight

SpectralWeight::SpectralWeight(std::vector<Part> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw DomainError("SpectralWeight: no parts");
  double total = 0.0;
  e_min_ = kInf;
  e_max_ = -kInf;
  for (auto& part : parts_) {
    if (auto* line = std::get_if<SpectralLine>(&part)) {
      if (!positive_finite(line->energy)) throw DomainError("SpectralWeight: line energy must be positive");
      if (!positive_finite(line->weight)) throw DomainError("SpectralWeight: line weight must be positive");
      total += line->weight;
      e_min_ = std::min(e_min_, line->energy);
      e_max_ = std::max(e_max_, line->energy);
      table_cdf_.emplace_back();
    } else {
      auto& t = std::get<SpectralTable>(part);
      if (t.energy.size() < 2 || t.energy.size() != t.density.size())
        throw DomainError("SpectralWeight: table needs >= 2 matching energy/density points");
      if (!positive_finite(t.weight)) throw DomainError("SpectralWeight: table weight must be positive");
      for (std::size_t k = 0; k < t.energy.size(); ++k) {
        if (!positive_finite(t.energy[k])) throw DomainError("SpectralWeight: table energies must be positive");
        if (k > 0 && !(t.energy[k] > t.energy[k - 1]))
          throw DomainError("SpectralWeight: table energies must be strictly increasing");
        if (!(t.density[k] >= 0.0) || !std::isfinite(t.density[k]))
          throw DomainError("SpectralWeight: table density must be finite and >= 0");
      }
      std::vector<double> cdf(t.energy.size(), 0.0);
      for (std::size_t k = 1; k < t.energy.size(); ++k)
        cdf[k] = cdf[k - 1] + table_segment_mass(t.density[k - 1], t.density[k], t.energy[k] - t.energy[k - 1]);
      const double mass = cdf.back();
      if (!(mass > 0.0)) throw DomainError("SpectralWeight: table has zero mass");
      for (auto& d : t.density) d /= mass;
      for (auto& c : cdf) c /= mass;
      cdf.back() = 1.0;
      table_cdf_.push_back(std::move(cdf));
      total += t.weight;
      e_min_ = std::min(e_min_, t.energy.front());
      e_max_ = std::max(e_max_, t.energy.back());
    }
  }
  part_cdf_.reserve(parts_.size());
  double acc = 0.0;
  for (auto& part : parts_) {
    double& w = std::visit([](auto& p) -> double& { return p.weight; }, part);
    w /= total;
    acc += w;
    part_cdf_.push_back(acc);
  }
  part_cdf_.back() = 1.0;
}

SpectralWeight SpectralWeight::line(double energy) { return SpectralWeight({SpectralLine{energy, 1.0}}); }

SpectralWeight SpectralWeight::flat(double e_min, double e_max) {
  return SpectralWeight({SpectralTable{{e_min, e_max}, {1.0, 1.0}, 1.0}});
}

double SpectralWeight::mean_energy() const {
  double mean = 0.0;
  for (const auto& part : parts_) {
    if (const auto* line = std::get_if<SpectralLine>(&part)) {
      mean += line->weight * line->energy;
      continue;
    }
    const auto& t = std::get<SpectralTable>(part);
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < t.energy.size(); ++k) {
      const double h = t.energy[k + 1] - t.energy[k];
      const double f0 = t.density[k];
      const double s = (t.density[k + 1] - f0) / h;
      const double e0 = t.energy[k];
      m += e0 * (f0 * h + 0.5 * s * h * h) + 0.5 * f0 * h * h + s * h * h * h / 3.0;
    }
    mean += t.weight * m;
  }
  return mean;
}

double SpectralWeight::mass(double lo, double hi) const {
  if (hi < lo) return 0.0;
  double m = 0.0;
  for (const auto& part : parts_) {
    if (const auto* line = std::get_if<SpectralLine>(&part)) {
      if (line->energy >= lo && line->energy <= hi) m += line->weight;
    } else {
      const auto& t = std::get<SpectralTable>(part);
      m += t.weight * table_mass(t, lo, hi);
    }
  }
  return m;
}

double SpectralWeight::sample(double u_part, double u_energy) const {
  const auto it = std::upper_bound(part_cdf_.begin(), part_cdf_.end(), u_part);
  const std::size_t idx = std::min<std::size_t>(it - part_cdf_.begin(), parts_.size() - 1);
  const auto& part = parts_[idx];
  if (const auto* line = std::get_if<SpectralLine>(&part)) return line->energy;

  const auto& t = std::get<SpectralTable>(part);
  const auto& cdf = table_cdf_[idx];
  const auto seg_it = std::upper_bound(cdf.begin(), cdf.end(), u_energy);
  std::size_t k = (seg_it == cdf.begin()) ? 0 : static_cast<std::size_t>(seg_it - cdf.begin()) - 1;
  k = std::min(k, t.energy.size() - 2);
  const double h = t.energy[k + 1] - t.energy[k];
  const double f0 = t.density[k];
  const double a = 0.5 * (t.density[k + 1] - f0) / h;
  const double r = std::max(0.0, u_energy - cdf[k]);
  // Solve f0 x + a x^2 = r in the cancellation-free form.
  const double disc = std::max(0.0, f0 * f0 + 4.0 * a * r);
  const double denom = f0 + std::sqrt(disc);
  double x = denom > 0.0 ? 2.0 * r / denom : 0.0;
  x = std::clamp(x, 0.0, h);
  return t.energy[k] + x;
}

// -------------------------------------------------------------- CoherenceLaw

double CoherenceLaw::operator()(double energy) const {
  if (exponent == 0.0) return tau_ref;
  return tau_ref * std::pow(energy / energy_ref, exponent);
}

void SourceModel::validate() const {
  if (weight.parts().empty()) throw DomainError("SourceModel: empty spectral weight");
  if (!(coherence.tau_ref > 0.0)) throw DomainError("SourceModel: tau_c must be positive");
  if (coherence.exponent != 0.0 && !positive_finite(coherence.energy_ref))
    throw DomainError("SourceModel: coherence energy_ref must be positive");
  for (double e : {weight.e_min(), weight.e_max()})
    if (!(coherence(e) > 0.0)) throw DomainError("SourceModel: tau_c(E) must be positive on the support");
  if (!(doppler_sigma >= 0.0) || !std::isfinite(doppler_sigma))
    throw DomainError("SourceModel: doppler sigma must be finite and >= 0");
}

// ------------------------------------------------------------- GasConditions

GasConditions GasConditions::from_mass_density(double rho, double temperature, double particle_mass,
                                               double cross_section) {
  if (!positive_finite(rho) || !positive_finite(particle_mass) || !positive_finite(temperature))
    throw DomainError("GasConditions: density, temperature and mass must be positive");
  const double n = rho / particle_mass;
  return {n * kBoltzmann * temperature, temperature, particle_mass, cross_section};
}

void GasConditions::validate() const {
  if (!positive_finite(pressure)) throw DomainError("GasConditions: pressure must be positive");
  if (!positive_finite(temperature)) throw DomainError("GasConditions: temperature must be positive");
  if (!positive_finite(particle_mass)) throw DomainError("GasConditions: particle mass must be positive");
  if (!positive_finite(cross_section)) throw DomainError("GasConditions: cross section must be positive");
}

double GasConditions::number_density() const { return pressure / (kBoltzmann * temperature); }

double GasConditions::mean_relative_speed() const {
  return std::sqrt(16.0 * kBoltzmann * temperature / (std::numbers::pi * particle_mass));
}

double collision_rate(const GasConditions& gas) {
  gas.validate();
  return gas.number_density() * gas.cross_section * gas.mean_relative_speed();
}

double collisional_coherence_time(const GasConditions& gas) { return 1.0 / collision_rate(gas); }

// ---------------------------------------------------------------- FilterSpec

double FilterSpec::center_omega() const { return energy_to_omega(center_energy); }

double FilterSpec::half_width_omega() const { return std::numbers::pi * bandwidth_hz; }

bool FilterSpec::is_identity() const { return std::isinf(bandwidth_hz); }

void FilterSpec::validate() const {
  if (!(bandwidth_hz > 0.0)) throw DomainError("FilterSpec: bandwidth must be positive");
  if (!is_identity() && !positive_finite(center_energy))
    throw DomainError("FilterSpec: center energy must be positive");
}

double FilterSpec::transmission(double omega) const {
  if (is_identity()) return 1.0;
  const double x = omega - center_omega();
  const double hw = half_width_omega();
  switch (shape) {
    case FilterShape::kTopHat:
      return std::abs(x) <= hw ? 1.0 : 0.0;
    case FilterShape::kLorentzian:
      return hw * hw / (x * x + hw * hw);
    case FilterShape::kGaussian: {
      const double sigma = hw / std::sqrt(2.0 * std::log(2.0));
      return std::exp(-0.5 * x * x / (sigma * sigma));
    }
  }
  return 0.0;
}

double FilterSpec::cell_transmission(double omega, double h) const {
  if (is_identity()) return 1.0;
  if (shape != FilterShape::kTopHat || h <= 0.0) return transmission(omega);
  const double lo = std::max(omega - 0.5 * h, center_omega() - half_width_omega());
  const double hi = std::min(omega + 0.5 * h, center_omega() + half_width_omega());
  return hi > lo ? (hi - lo) / h : 0.0;
}

// ------------------------------------------------------------------ sampling

WavePacket sample_packet(const SourceModel& source, CounterStream& stream) {
  const double u_part = stream.uniform();
  const double u_energy = stream.uniform();
  const double energy = source.weight.sample(u_part, u_energy);
  double omega = energy_to_omega(energy);
  if (source.doppler_sigma > 0.0) {
    double shifted = omega + source.doppler_sigma * stream.normal();
    while (!(shifted > 0.0)) shifted = omega + source.doppler_sigma * stream.normal();
    omega = shifted;
  }
  WavePacket p;
  p.omega0 = omega;
  p.tau_c = source.coherence(energy);
  p.t_e = 0.0;
  p.phi = kTwoPi * stream.uniform();
  if (p.phi >= kTwoPi) p.phi = 0.0;
  return p;
}

// ------------------------------------------------------------------------ g1

std::complex<double> g1(const WavePacket& packet, double tau) {
  const double env = std::isinf(packet.tau_c) ? 1.0 : std::exp(-std::abs(tau) / packet.tau_c);
  return std::polar(env, -packet.omega0 * tau);
}

double g1_envelope(double tau, double tau_c, double doppler_sigma) {
  const double lorentz = std::isinf(tau_c) ? 0.0 : std::abs(tau) / tau_c;
  return std::exp(-lorentz - 0.5 * doppler_sigma * doppler_sigma * tau * tau);
}

std::complex<double> g1(const SourceModel& source, double tau) {
  std::complex<double> acc{0.0, 0.0};
  for (const auto& part : source.weight.parts()) {
    if (const auto* line = std::get_if<SpectralLine>(&part)) {
      const double tc = source.coherence(line->energy);
      acc += line->weight * std::polar(g1_envelope(tau, tc, 0.0), -energy_to_omega(line->energy) * tau);
      continue;
    }
    const auto& t = std::get<SpectralTable>(part);
    for (std::size_t k = 0; k + 1 < t.energy.size(); ++k) {
      const double a = t.energy[k];
      const double b = t.energy[k + 1];
      const double phase_span = std::abs(energy_to_omega(b - a) * tau);
      const auto panels = static_cast<std::size_t>(std::ceil(phase_span / 0.25)) + 4;
      const double ph = (b - a) / static_cast<double>(panels);
      const double s = (t.density[k + 1] - t.density[k]) / (b - a);
      for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * ph;
        for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
          const double e = mid + 0.5 * ph * kGlNodes[q];
          const double f = t.density[k] + s * (e - a);
          const double w = 0.5 * ph * kGlWeights[q] * f * t.weight;
          acc += w * std::polar(g1_envelope(tau, source.coherence(e), 0.0), -energy_to_omega(e) * tau);
        }
      }
    }
  }
  return acc * std::exp(-0.5 * source.doppler_sigma * source.doppler_sigma * tau * tau);
}

// ---------------------------------------------------------- FilteredSpectrum

namespace {

struct Atom {
  double omega;
  double mass;
};

}  // namespace

FilteredSpectrum::FilteredSpectrum(const WavePacket& packet, const FilterSpec& filter,
                                   const SpectralGridOptions& options)
    : FilteredSpectrum(SourceModel{SpectralWeight::line(omega_to_energy(packet.omega0)),
                                   CoherenceLaw{packet.tau_c, 1.0, 0.0}, 0.0},
                       filter, options) {}

FilteredSpectrum::FilteredSpectrum(const SourceModel& source, const FilterSpec& filter,
                                   const SpectralGridOptions& options) {
  source.validate();
  filter.validate();
  if (options.points < 16) throw DomainError("FilteredSpectrum: need at least 16 grid points");

  const double sigma = source.doppler_sigma;
  const double tau_lo = std::min(source.coherence(source.weight.e_min()), source.coherence(source.weight.e_max()));
  const double gamma_max = std::isinf(tau_lo) ? 0.0 : 1.0 / tau_lo;
  const double linewidth_omega = kTwoPi * gamma_max;
  omega_ref_ = energy_to_omega(source.weight.mean_energy());

  std::vector<Atom> atoms;
  const bool has_width = gamma_max > 0.0 || sigma > 0.0;
  double omega_lo = energy_to_omega(source.weight.e_min());
  double omega_hi = energy_to_omega(source.weight.e_max());
  if (has_width) {
    const double pad = options.half_span_linewidths * linewidth_omega + 8.0 * sigma;
    omega_lo -= pad;
    omega_hi += pad;
  }
  const bool has_table = std::any_of(source.weight.parts().begin(), source.weight.parts().end(),
                                     [](const auto& p) { return std::holds_alternative<SpectralTable>(p); });

  // Band-limited filters narrower than the source span get a grid on their own support,
  // padded by the Doppler reach so the convolution is exact inside the passband.
  bool windowed = false;
  if ((has_width || has_table) && !filter.is_identity() && filter.shape != FilterShape::kLorentzian) {
    const double hw = filter.half_width_omega();
    const double reach = filter.shape == FilterShape::kTopHat ? hw : 8.0 * hw / std::sqrt(2.0 * std::log(2.0));
    const double w_lo = std::max(omega_lo, filter.center_omega() - reach - 8.0 * sigma);
    const double w_hi = std::min(omega_hi, filter.center_omega() + reach + 8.0 * sigma);
    if (!(w_hi > w_lo)) throw EmptyResultError("filter transmits no spectral weight (filtered out)");
    if (w_hi - w_lo < 0.25 * (omega_hi - omega_lo)) {
      windowed = true;
      omega_lo = w_lo;
      omega_hi = w_hi;
    }
  }

  double tail_a = 0.0;
  if (has_width || has_table) {
    const std::size_t n = options.points;
    omega_.resize(n);
    if (windowed) {
      // cell centres tiling the window
      step_ = (omega_hi - omega_lo) / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) omega_[k] = omega_lo + step_ * (static_cast<double>(k) + 0.5);
    } else {
      step_ = (omega_hi - omega_lo) / static_cast<double>(n - 1);
      for (std::size_t k = 0; k < n; ++k) omega_[k] = omega_lo + step_ * static_cast<double>(k);
    }
    std::vector<double> dens(n, 0.0);
    for (const auto& part : source.weight.parts()) {
      if (const auto* line = std::get_if<SpectralLine>(&part)) {
        const double wl = energy_to_omega(line->energy);
        const double tc = source.coherence(line->energy);
        if (std::isinf(tc)) {
          // Delta line: deposit into the nearest cell; only meaningful with Doppler.
          const double pos = std::round((wl - omega_.front()) / step_);
          if (windowed && (pos < 0.0 || pos > static_cast<double>(n - 1))) continue;
          const auto k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n - 1)));
          dens[k] += line->weight / step_;
          continue;
        }
        const double g = 1.0 / tc;
        tail_a += line->weight * g / std::numbers::pi;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = omega_[k] - wl;
          dens[k] += line->weight * (g / std::numbers::pi) / (x * x + g * g);
        }
        continue;
      }
      const auto& t = std::get<SpectralTable>(part);
      for (std::size_t s = 0; s + 1 < t.energy.size(); ++s) {
        const double a = energy_to_omega(t.energy[s]);
        const double b = energy_to_omega(t.energy[s + 1]);
        // density per rad/s
        const double fa = t.weight * t.density[s] * kHbar;
        const double fb = t.weight * t.density[s + 1] * kHbar;
        const double slope = (fb - fa) / (b - a);
        const double tc = source.coherence(0.5 * (t.energy[s] + t.energy[s + 1]));
        const double seg_mass = 0.5 * (fa + fb) * (b - a);
        if (std::isinf(tc)) {
          for (std::size_t k = 0; k < n; ++k)
            if (omega_[k] >= a && omega_[k] <= b) dens[k] += fa + slope * (omega_[k] - a);
          continue;
        }
        const double g = 1.0 / tc;
        tail_a += seg_mass * g / std::numbers::pi;
        for (std::size_t k = 0; k < n; ++k) {
          const double w = omega_[k];
          const double c0 = fa + slope * (w - a);
          const double xa = a - w;
          const double xb = b - w;
          const double at = std::atan2(xb, g) - std::atan2(xa, g);
          const double lg = std::log((xb * xb + g * g) / (xa * xa + g * g));
          dens[k] += c0 * at / std::numbers::pi + slope * g * lg / (2.0 * std::numbers::pi);
        }
      }
    }
    if (sigma > 0.0) {
      const auto half = static_cast<std::ptrdiff_t>(std::ceil(8.0 * sigma / step_));
      std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
      double ksum = 0.0;
      for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const double x = static_cast<double>(j) * step_;
        kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * x * x / (sigma * sigma));
        ksum += kernel[static_cast<std::size_t>(j + half)];
      }
      for (auto& kv : kernel) kv /= ksum;
      std::vector<double> conv(n, 0.0);
      const auto ni = static_cast<std::ptrdiff_t>(n);
      for (std::ptrdiff_t k = 0; k < ni; ++k) {
        double acc = 0.0;
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(-half, k - (ni - 1));
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(half, k);
        for (std::ptrdiff_t j = j0; j <= j1; ++j) acc += kernel[static_cast<std::size_t>(j + half)] * dens[static_cast<std::size_t>(k - j)];
        conv[static_cast<std::size_t>(k)] = acc;
      }
      dens.swap(conv);
    }
    filtered_ = std::move(dens);
  } else {
    // Only undamped lines without Doppler: a set of exact atoms.
    for (const auto& part : source.weight.parts()) {
      const auto& line = std::get<SpectralLine>(part);
      omega_.push_back(energy_to_omega(line.energy));
      filtered_.push_back(line.weight);
    }
    step_ = 0.0;
  }

  // Unfiltered totals, then apply |T|^2.
  const std::size_t n = omega_.size();
  std::vector<double> cell_w(n, 1.0);
  if (step_ > 0.0) {
    for (std::size_t k = 0; k < n; ++k) cell_w[k] = step_;
    if (!windowed) {
      cell_w.front() *= 0.5;
      cell_w.back() *= 0.5;
    }
  }
  double total = 0.0;
  if (windowed) {
    // the grid no longer holds the whole source; its parts carry their masses
    for (const auto& part : source.weight.parts())
      total += std::visit([](const auto& p) { return p.weight; }, part);
  } else {
    for (std::size_t k = 0; k < n; ++k) total += cell_w[k] * filtered_[k];
  }
  double tail_l_coef = 0.0;
  double tail_r_coef = 0.0;
  if (step_ > 0.0 && tail_a > 0.0 && !windowed) {
    const double xl = omega_ref_ - omega_.front();
    const double xr = omega_.back() - omega_ref_;
    total += tail_a / xl + tail_a / xr;
    tail_l_coef = tail_a * filter.transmission(omega_.front());
    tail_r_coef = tail_a * filter.transmission(omega_.back());
  }
  total_ = total;
  for (std::size_t k = 0; k < n; ++k)
    filtered_[k] *= step_ > 0.0 ? filter.cell_transmission(omega_[k], step_) : filter.transmission(omega_[k]);
  for (std::size_t k = 0; k < n; ++k) filtered_[k] *= cell_w[k];  // store cell masses
  tail_left_ = tail_l_coef;
  tail_right_ = tail_r_coef;
  finish(filter, tail_l_coef, tail_r_coef);
}

void FilteredSpectrum::finish(const FilterSpec&, double, double) {
  double transmitted = std::accumulate(filtered_.begin(), filtered_.end(), 0.0);
  if (step_ > 0.0) {
    transmitted += tail_left_ / (omega_ref_ - omega_.front()) + tail_right_ / (omega_.back() - omega_ref_);
  }
  transmitted_ = transmitted;
  if (!(transmitted_ > 1e-12 * total_))
    throw EmptyResultError("filter transmits no spectral weight (filtered out)");
  cdf_.resize(filtered_.size());
  std::partial_sum(filtered_.begin(), filtered_.end(), cdf_.begin());
}

std::complex<double> FilteredSpectrum::raw_transform(double tau) const {
  std::complex<double> acc{0.0, 0.0};
  const std::size_t n = omega_.size();
  if (step_ > 0.0) {
    // e^{-i (w_k - w_ref) tau} by recurrence, re-anchored every 256 steps.
    std::complex<double> rot = std::polar(1.0, -step_ * tau);
    std::complex<double> ph{};
    for (std::size_t k = 0; k < n; ++k) {
      if (k % 256 == 0) ph = std::polar(1.0, -(omega_[k] - omega_ref_) * tau);
      acc += filtered_[k] * ph;
      ph *= rot;
    }
    if (tail_left_ > 0.0) acc += tail_left_ * std::conj(tail_transform(omega_ref_ - omega_.front(), tau));
    if (tail_right_ > 0.0) acc += tail_right_ * tail_transform(omega_.back() - omega_ref_, tau);
  } else {
    for (std::size_t k = 0; k < n; ++k) acc += filtered_[k] * std::polar(1.0, -(omega_[k] - omega_ref_) * tau);
  }
  return acc;
}

std::complex<double> FilteredSpectrum::correlation(double tau) const {
  return raw_transform(tau) / transmitted_ * std::polar(1.0, -omega_ref_ * tau);
}

std::vector<std::complex<double>> FilteredSpectrum::correlation(std::span<const double> taus) const {
  std::vector<std::complex<double>> out;
  out.reserve(taus.size());
  for (double t : taus) out.push_back(correlation(t));
  return out;
}

double FilteredSpectrum::sample_omega(double u) const {
  const double target = u * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  const std::size_t k = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  if (step_ == 0.0) return omega_[k];
  const double prev = k == 0 ? 0.0 : cdf_[k - 1];
  const double frac = filtered_[k] > 0.0 ? (target - prev) / filtered_[k] : 0.5;
  return omega_[k] + (frac - 0.5) * step_;
}

std::vector<double> filtered_g1(const SourceModel& source, const FilterSpec& filter,
                                std::span<const double> tau_grid, const SpectralGridOptions& options) {
  if (tau_grid.size() >= 3) {
    const double h = tau_grid[1] - tau_grid[0];
    for (std::size_t k = 2; k < tau_grid.size(); ++k)
      if (std::abs((tau_grid[k] - tau_grid[k - 1]) - h) > 1e-9 * std::abs(h) + 1e-300)
        throw DomainError("filtered_g1: tau grid must be uniform");
  }
  const FilteredSpectrum spec(source, filter, options);
  std::vector<double> out;
  out.reserve(tau_grid.size());
  for (double t : tau_grid) out.push_back(std::abs(spec.correlation(t)));
  return out;
}

}  // namespace photocoh::spectral
