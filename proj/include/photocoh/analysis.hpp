#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "photocoh/engine.hpp"
#include "photocoh/optics.hpp"

namespace photocoh::analysis {

/// Visibility per fringe cell. Cells are one carrier period wide in delay,
/// centred on the carrier maxima tau_m = 2 pi m / omega.
struct VisibilityProfile {
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> v_err;
  std::vector<bool> clamped;
  double omega = 0.0;  // carrier used for the cells
  bool centre_present = false;

  void validate() const;
};

/// Least-squares fit of each cell's pixel counts to
/// a D + (b + b1 |tau|) cos(w tau) + (c + c1 |tau|) sin(w tau),
/// pixel-integrated. V = sqrt(b^2 + c^2) / a at the cell centre, Poisson errors.
VisibilityProfile visibility_profile(std::span<const double> counts, const optics::Geometry& geom,
                                     const optics::PixelGrid& grid, double omega);

VisibilityProfile visibility_profile(const engine::FringePattern& pattern, const optics::Geometry& geom,
                                     const optics::PixelGrid& grid, double omega);

struct FringeCount {
  double n_f = 0.0;
  std::size_t cells_above = 0;
  bool envelope_reached = true;  // false when every cell on screen passes
  bool one_sided = false;        // only tau >= 0 visible; counted as 2 n + 1
};

/// Cells with V >= threshold. The zero-delay cell is implied when off screen,
/// and a missing side mirrors the visible one.
FringeCount count_fringes(const VisibilityProfile& profile, double threshold = 0.36787944117144233);

struct CoherenceEstimate {
  double n_f = 0.0;
  double l_s = 0.0;    // m
  double tau_s = 0.0;  // s
  std::string method;
};

/// l_s = n_f lambda / 2, tau_s = l_s / c.
CoherenceEstimate coherence_from_count(double n_f, double lambda);

/// Delay where the envelope falls through `threshold`, from a weighted
/// log-linear fit of the cells bracketing the crossing. Reported with the
/// equivalent continuous fringe count n_f = 2 c tau / lambda.
CoherenceEstimate envelope_crossing(const VisibilityProfile& profile, double lambda,
                                    double threshold = 0.36787944117144233);

struct VoigtFit {
  double inv_tau_c = 0.0;  // 1/tau_c
  double inv_tau_c_err = 0.0;
  double sigma2 = 0.0;  // sigma_omega^2
  double sigma2_err = 0.0;
  double tau_c = 0.0;
  double sigma_omega = 0.0;
  bool clamped = false;
  std::size_t points = 0;
};

/// Weighted least squares of -log V = |tau|/tau_c + sigma^2 tau^2 / 2.
VoigtFit fit_voigt_envelope(const VisibilityProfile& profile);

}  // namespace photocoh::analysis
