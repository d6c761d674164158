#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "photocoh/spectral.hpp"

namespace photocoh::optics {

struct DoubleSlit {
  double separation = 1e-3;  // d (m)
  double distance = 1.0;     // L (m)
  double slit_width = 0.0;   // a (m), 0 = ideal slits
  bool small_angle = true;
};

/// Scanned-delay interferometer. The screen coordinate is the delay itself (s).
struct Michelson {
  double tau_min = 0.0;
  double tau_max = 0.0;
};

using Geometry = std::variant<DoubleSlit, Michelson>;

void validate(const Geometry& geom);

/// Uniform pixel row along the screen coordinate. For a Michelson the
/// coordinate and the pitch are in seconds.
struct PixelGrid {
  std::size_t n_pixels = 0;
  double pitch = 0.0;
  double y_min = 0.0;

  double edge(std::size_t i) const { return y_min + pitch * static_cast<double>(i); }
  double center(std::size_t i) const { return y_min + pitch * (static_cast<double>(i) + 0.5); }
  double y_max() const { return edge(n_pixels); }
};

double path_delay(const Geometry& geom, double y);

/// Slope dtau/dy when the delay is exactly linear in y (small angle or
/// Michelson); 0 otherwise.
double linear_delay_slope(const Geometry& geom);

/// Single-slit envelope D(y); 1 for ideal slits and for the Michelson.
double slit_envelope(const Geometry& geom, double y, double omega);

/// Unnormalized D(y) * [1 + Re g1(tau_d(y))] for one packet.
double detection_density(const spectral::WavePacket& packet, const Geometry& geom, double y);

/// detection_density normalized to unit integral over the pixel row.
double detection_pdf(const spectral::WavePacket& packet, const Geometry& geom, const PixelGrid& grid,
                     double y);

/// Probability of landing in each pixel (sums to 1). Uses a closed-form
/// primitive when possible, 3-point Gauss-Legendre per pixel otherwise.
std::vector<double> pixel_probabilities(const spectral::WavePacket& packet, const Geometry& geom,
                                        const PixelGrid& grid);

/// Same for an arbitrary complex degree of coherence. `omega` only feeds D(y).
std::vector<double> pixel_probabilities(const std::function<std::complex<double>(double)>& g1,
                                        double omega, const Geometry& geom, const PixelGrid& grid);

/// Spectrum of the packet after an optical filter. The grid spans
/// +-8 linewidths around the carrier; a filter with less than 1e-12 of the
/// weight inside raises EmptyResultError.
spectral::FilteredSpectrum apply_optical_filter(const spectral::WavePacket& packet,
                                                const spectral::FilterSpec& filter);

/// |g1| of the filtered packet on the given delays.
std::vector<double> filtered_packet_g1(const spectral::WavePacket& packet, const spectral::FilterSpec& filter,
                                       std::span<const double> taus);

}  // namespace photocoh::optics
