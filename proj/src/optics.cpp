#include "photocoh/optics.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::optics {

namespace {

constexpr std::array<double, 3> kGl3Nodes = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGl3Weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// int_0^tau Re g1; odd in tau.
double fringe_primitive(double tau, double omega, double tau_c) {
  const double t = std::abs(tau);
  const double rate = std::isinf(tau_c) ? 0.0 : 1.0 / tau_c;
  const std::complex<double> z{-rate, -omega};
  const double v = ((std::exp(z * t) - 1.0) / z).real();
  return tau < 0.0 ? -v : v;
}

void check_grid(const PixelGrid& grid) {
  if (grid.n_pixels < 2 || !(grid.pitch > 0.0)) throw DomainError("PixelGrid: need >= 2 pixels and pitch > 0");
}

std::vector<double> normalized(std::vector<double> m) {
  double total = 0.0;
  for (double v : m) total += v;
  if (!(total > 0.0)) throw DomainError("detection pattern has no weight on the screen");
  for (double& v : m) v /= total;
  return m;
}

template <class Density>
std::vector<double> quadrature_masses(const PixelGrid& grid, Density&& density) {
  std::vector<double> m(grid.n_pixels, 0.0);
  for (std::size_t i = 0; i < grid.n_pixels; ++i) {
    const double c = grid.center(i);
    double acc = 0.0;
    for (std::size_t q = 0; q < kGl3Nodes.size(); ++q) acc += kGl3Weights[q] * density(c + 0.5 * grid.pitch * kGl3Nodes[q]);
    m[i] = std::max(0.0, 0.5 * grid.pitch * acc);
  }
  return m;
}

}  // namespace

void validate(const Geometry& geom) {
  if (const auto* ds = std::get_if<DoubleSlit>(&geom)) {
    if (!(ds->separation > 0.0) || !(ds->distance > 0.0))
      throw DomainError("DoubleSlit: separation and distance must be positive");
    if (!(ds->slit_width >= 0.0)) throw DomainError("DoubleSlit: slit width must be >= 0");
    if (ds->small_angle && ds->distance / ds->separation < 100.0)
      throw DomainError("DoubleSlit: small-angle mode needs L/d >= 100");
    return;
  }
  const auto& mi = std::get<Michelson>(geom);
  if (!(mi.tau_max > mi.tau_min)) throw DomainError("Michelson: tau_max must exceed tau_min");
}

double path_delay(const Geometry& geom, double y) {
  if (const auto* ds = std::get_if<DoubleSlit>(&geom)) {
    const double d = ds->separation;
    const double L = ds->distance;
    if (ds->small_angle) return d * y / (L * kSpeedOfLight);
    const double rp = std::hypot(L, y + 0.5 * d);
    const double rm = std::hypot(L, y - 0.5 * d);
    // (rp - rm) rewritten without cancellation; rp + rm is even in y
    return 2.0 * y * d / (kSpeedOfLight * (rp + rm));
  }
  return y;
}

double linear_delay_slope(const Geometry& geom) {
  if (const auto* ds = std::get_if<DoubleSlit>(&geom))
    return ds->small_angle ? ds->separation / (ds->distance * kSpeedOfLight) : 0.0;
  return 1.0;
}

double slit_envelope(const Geometry& geom, double y, double omega) {
  const auto* ds = std::get_if<DoubleSlit>(&geom);
  if (ds == nullptr || ds->slit_width == 0.0) return 1.0;
  const double lambda = omega_to_wavelength(omega);
  const double x = std::numbers::pi * ds->slit_width * y / (lambda * ds->distance);
  if (std::abs(x) < 1e-8) return 1.0;
  const double s = std::sin(x) / x;
  return s * s;
}

double detection_density(const spectral::WavePacket& packet, const Geometry& geom, double y) {
  const double tau = path_delay(geom, y);
  return slit_envelope(geom, y, packet.omega0) * (1.0 + spectral::g1(packet, tau).real());
}

std::vector<double> pixel_probabilities(const spectral::WavePacket& packet, const Geometry& geom,
                                        const PixelGrid& grid) {
  check_grid(grid);
  const double slope = linear_delay_slope(geom);
  const auto* ds = std::get_if<DoubleSlit>(&geom);
  const bool ideal = ds == nullptr || ds->slit_width == 0.0;
  if (slope != 0.0 && ideal) {
    std::vector<double> m(grid.n_pixels);
    double prev = fringe_primitive(slope * grid.edge(0), packet.omega0, packet.tau_c);
    for (std::size_t i = 0; i < grid.n_pixels; ++i) {
      const double next = fringe_primitive(slope * grid.edge(i + 1), packet.omega0, packet.tau_c);
      m[i] = std::max(0.0, grid.pitch + (next - prev) / slope);
      prev = next;
    }
    return normalized(std::move(m));
  }
  return normalized(quadrature_masses(grid, [&](double y) { return detection_density(packet, geom, y); }));
}

std::vector<double> pixel_probabilities(const std::function<std::complex<double>(double)>& g1, double omega,
                                        const Geometry& geom, const PixelGrid& grid) {
  check_grid(grid);
  return normalized(quadrature_masses(grid, [&](double y) {
    return slit_envelope(geom, y, omega) * (1.0 + g1(path_delay(geom, y)).real());
  }));
}

double detection_pdf(const spectral::WavePacket& packet, const Geometry& geom, const PixelGrid& grid, double y) {
  check_grid(grid);
  const auto raw = quadrature_masses(grid, [&](double v) { return detection_density(packet, geom, v); });
  double total = 0.0;
  for (double v : raw) total += v;
  // The analytic masses are more accurate than quadrature when available.
  if (linear_delay_slope(geom) != 0.0) {
    const auto* ds = std::get_if<DoubleSlit>(&geom);
    if (ds == nullptr || ds->slit_width == 0.0) {
      const double slope = linear_delay_slope(geom);
      const double a = slope * grid.edge(0);
      const double b = slope * grid.y_max();
      total = (grid.y_max() - grid.edge(0)) +
              (fringe_primitive(b, packet.omega0, packet.tau_c) - fringe_primitive(a, packet.omega0, packet.tau_c)) / slope;
    }
  }
  return detection_density(packet, geom, y) / total;
}

spectral::FilteredSpectrum apply_optical_filter(const spectral::WavePacket& packet,
                                                const spectral::FilterSpec& filter) {
  packet.validate();
  return spectral::FilteredSpectrum(packet, filter, spectral::SpectralGridOptions{1u << 14, 8.0});
}

std::vector<double> filtered_packet_g1(const spectral::WavePacket& packet, const spectral::FilterSpec& filter,
                                       std::span<const double> taus) {
  const auto spec = apply_optical_filter(packet, filter);
  std::vector<double> out;
  out.reserve(taus.size());
  for (double t : taus) out.push_back(std::abs(spec.correlation(t)));
  return out;
}

}  // namespace photocoh::optics
