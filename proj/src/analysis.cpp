#include "photocoh/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::analysis {

namespace {

constexpr std::array<double, 3> kGl3Nodes = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGl3Weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
// Local model per carrier cell: a + b cos + c sin, plus |tau| cos in the cell holding the
// cusp at tau = 0. A linear envelope elsewhere is orthogonal to these by symmetry.
constexpr int kMaxParams = 4;

struct Cell {
  long m = 0;
  double tau = 0.0;
  std::vector<std::size_t> pixels;
};

}  // namespace

void VisibilityProfile::validate() const {
  if (v.size() != tau.size() || v_err.size() != tau.size() || clamped.size() != tau.size())
    throw DomainError("VisibilityProfile: column length mismatch");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (i > 0 && !(tau[i] > tau[i - 1])) throw DomainError("VisibilityProfile: tau grid must increase");
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw DomainError("VisibilityProfile: V outside [0, 1]");
  }
}

VisibilityProfile visibility_profile(std::span<const double> counts, const optics::Geometry& geom,
                                     const optics::PixelGrid& grid, double omega) {
  if (counts.size() != grid.n_pixels) throw DomainError("visibility_profile: counts do not match the pixel grid");
  if (!(omega > 0.0)) throw DomainError("visibility_profile: carrier must be positive");
  const double period = kTwoPi / omega;
  const std::size_t n = grid.n_pixels;

  std::vector<double> tau_edge(n + 1);
  for (std::size_t i = 0; i <= n; ++i) tau_edge[i] = optics::path_delay(geom, grid.edge(i));
  double min_ppf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) min_ppf = std::min(min_ppf, period / std::abs(tau_edge[i + 1] - tau_edge[i]));
  if (min_ppf < 8.0 - 1e-9)
    throw EstimatorError("visibility_profile: fewer than 8 pixels per fringe (" + std::to_string(min_ppf) + ")");

  const double lo = std::min(tau_edge.front(), tau_edge.back());
  const double hi = std::max(tau_edge.front(), tau_edge.back());
  const auto m_lo = static_cast<long>(std::ceil((lo + 0.5 * period) / period - 1e-9));
  const auto m_hi = static_cast<long>(std::floor((hi - 0.5 * period) / period + 1e-9));

  std::vector<Cell> cells;
  for (long m = m_lo; m <= m_hi; ++m) cells.push_back({m, period * static_cast<double>(m), {}});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = optics::path_delay(geom, grid.center(i));
    const auto m = static_cast<long>(std::floor(t / period + 0.5));
    if (m < m_lo || m > m_hi) continue;
    cells[static_cast<std::size_t>(m - m_lo)].pixels.push_back(i);
  }

  VisibilityProfile prof;
  prof.omega = omega;
  for (const auto& cell : cells) {
    const auto np = static_cast<Eigen::Index>(cell.pixels.size());
    const int k = cell.m == 0 ? kMaxParams : 3;
    if (np < k + 1) continue;
    Eigen::MatrixXd X(np, k);
    Eigen::VectorXd y(np);
    double total = 0.0;
    for (Eigen::Index r = 0; r < np; ++r) {
      const std::size_t i = cell.pixels[static_cast<std::size_t>(r)];
      Eigen::Matrix<double, kMaxParams, 1> acc = Eigen::Matrix<double, kMaxParams, 1>::Zero();
      for (std::size_t q = 0; q < kGl3Nodes.size(); ++q) {
        const double yy = grid.center(i) + 0.5 * grid.pitch * kGl3Nodes[q];
        const double t = optics::path_delay(geom, yy);
        const double d = optics::slit_envelope(geom, yy, omega) * kGl3Weights[q];
        const double ph = omega * (t - cell.tau);
        const double c = std::cos(ph);
        acc += d * Eigen::Matrix<double, kMaxParams, 1>(1.0, c, std::sin(ph), std::abs(t) / period * c);
      }
      X.row(r) = (0.5 * grid.pitch * acc.head(k)).transpose();
      y(r) = counts[i];
      total += counts[i];
    }
    prof.tau.push_back(cell.tau);
    if (cell.m == 0) prof.centre_present = true;
    if (total <= 0.0) {
      prof.v.push_back(0.0);
      prof.v_err.push_back(1.0);
      prof.clamped.push_back(true);
      continue;
    }
    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
    const Eigen::VectorXd beta = ldlt.solve(X.transpose() * y);
    const Eigen::VectorXd fitted = (X * beta).cwiseMax(0.0);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd meat = X.transpose() * fitted.asDiagonal() * X;
    const Eigen::MatrixXd cov = inv * meat * inv;

    const double a = beta(0);
    const double r = std::hypot(beta(1), beta(2));
    double v = a > 0.0 ? r / a : 0.0;
    double err = 1.0;
    if (a > 0.0) {
      if (r > 0.0) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
        g(0) = -v / a;
        g(1) = beta(1) / (a * r);
        g(2) = beta(2) / (a * r);
        err = std::sqrt(std::max(0.0, g.dot(cov * g)));
      } else {
        err = std::sqrt(std::max(0.0, 0.5 * (cov(1, 1) + cov(2, 2)))) / a;
      }
    }
    bool clamped = false;
    if (!(v >= 0.0)) {
      v = 0.0;
      clamped = true;
    }
    if (v > 1.0) {
      v = 1.0;
      clamped = true;
    }
    prof.v.push_back(v);
    prof.v_err.push_back(err);
    prof.clamped.push_back(clamped);
  }
  if (prof.tau.empty()) throw EstimatorError("visibility_profile: no complete fringe cell on the screen");
  return prof;
}

VisibilityProfile visibility_profile(const engine::FringePattern& pattern, const optics::Geometry& geom,
                                     const optics::PixelGrid& grid, double omega) {
  std::vector<double> c(pattern.counts.begin(), pattern.counts.end());
  return visibility_profile(c, geom, grid, omega);
}

FringeCount count_fringes(const VisibilityProfile& profile, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("count_fringes: threshold must be in (0, 1)");
  std::size_t left = 0, right = 0, left_cells = 0, right_cells = 0;
  bool centre_pass = false;
  bool centre = false;
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    const bool pass = profile.v[i] >= threshold;
    const double t = profile.tau[i];
    if (std::abs(t) < 1e-3 * (kTwoPi / profile.omega)) {
      centre = true;
      centre_pass = pass;
    } else if (t < 0.0) {
      ++left_cells;
      left += pass ? 1 : 0;
    } else {
      ++right_cells;
      right += pass ? 1 : 0;
    }
  }
  FringeCount out;
  out.cells_above = left + right + (centre_pass ? 1 : 0);
  out.envelope_reached = out.cells_above < profile.tau.size();
  const double mid = centre ? (centre_pass ? 1.0 : 0.0) : 1.0;
  if (left_cells > 0 && right_cells > 0) {
    out.n_f = static_cast<double>(left + right) + mid;
  } else {
    out.one_sided = true;
    out.n_f = 2.0 * static_cast<double>(left + right) + mid;
  }
  return out;
}

CoherenceEstimate coherence_from_count(double n_f, double lambda) {
  if (!(n_f >= 1.0)) throw DomainError("coherence_from_count: n_f must be >= 1");
  if (!(lambda > 0.0)) throw DomainError("coherence_from_count: wavelength must be positive");
  CoherenceEstimate e;
  e.n_f = n_f;
  e.l_s = 0.5 * n_f * lambda;
  e.tau_s = e.l_s / kSpeedOfLight;
  e.method = "fringe-count";
  return e;
}

CoherenceEstimate envelope_crossing(const VisibilityProfile& profile, double lambda, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("envelope_crossing: threshold must be in (0, 1)");
  const double period = kTwoPi / profile.omega;
  // first |tau| (over both sides) where the envelope is below threshold
  double first_fail = std::numeric_limits<double>::infinity();
  double last_pass = 0.0;
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    const double a = std::abs(profile.tau[i]);
    if (profile.v[i] < threshold) first_fail = std::min(first_fail, a);
  }
  if (std::isinf(first_fail)) throw EstimatorError("envelope not reached on screen");
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    const double a = std::abs(profile.tau[i]);
    if (a < first_fail && profile.v[i] >= threshold) last_pass = std::max(last_pass, a);
  }
  const double centre = 0.5 * (first_fail + last_pass);
  const double half = std::max(2.5 * period, 0.25 * centre);

  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    const double a = std::abs(profile.tau[i]);
    const double v = profile.v[i];
    if (std::abs(a - centre) > half || !(v > 0.0)) continue;
    const double w = profile.v_err[i] > 0.0 ? (v / profile.v_err[i]) * (v / profile.v_err[i]) : 1.0;
    const double ly = std::log(v);
    sw += w;
    sx += w * a;
    sy += w * ly;
    sxx += w * a * a;
    sxy += w * a * ly;
    ++used;
  }
  const double det = sw * sxx - sx * sx;
  if (used < 2 || !(det > 0.0)) throw EstimatorError("envelope_crossing: too few cells around the crossing");
  const double slope = (sw * sxy - sx * sy) / det;
  const double icpt = (sy - slope * sx) / sw;
  if (!(slope < 0.0)) throw EstimatorError("envelope_crossing: envelope not decreasing near the crossing");
  const double tau = (std::log(threshold) - icpt) / slope;
  CoherenceEstimate e;
  e.tau_s = tau;
  e.l_s = kSpeedOfLight * tau;
  e.n_f = 2.0 * e.l_s / lambda;
  e.method = "envelope-crossing";
  return e;
}

VoigtFit fit_voigt_envelope(const VisibilityProfile& profile) {
  struct Pt {
    double x1, x2, y, w;
  };
  std::vector<Pt> pts;
  const double period = kTwoPi / profile.omega;
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    const double t = profile.tau[i];
    const double v = profile.v[i];
    const double e = profile.v_err[i];
    if (std::abs(t) < 1e-3 * period || !(v > 0.0)) continue;
    if (e > 0.0 && !(v > 2.0 * e)) continue;
    const double w = e > 0.0 ? (v / e) * (v / e) : 1.0;
    pts.push_back({std::abs(t), 0.5 * t * t, -std::log(v), w});
  }
  if (pts.size() < 3) throw EstimatorError("fit_voigt_envelope: fewer than 3 usable cells");
  const bool weighted = std::any_of(profile.v_err.begin(), profile.v_err.end(), [](double e) { return e > 0.0; });

  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (const auto& p : pts) {
    s11 += p.w * p.x1 * p.x1;
    s12 += p.w * p.x1 * p.x2;
    s22 += p.w * p.x2 * p.x2;
    b1 += p.w * p.x1 * p.y;
    b2 += p.w * p.x2 * p.y;
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(det > 1e-12 * s11 * s22)) throw EstimatorError("fit_voigt_envelope: degenerate design (insufficient span)");

  VoigtFit fit;
  fit.points = pts.size();
  fit.inv_tau_c = (s22 * b1 - s12 * b2) / det;
  fit.sigma2 = (s11 * b2 - s12 * b1) / det;
  if (weighted) {
    fit.inv_tau_c_err = std::sqrt(s22 / det);
    fit.sigma2_err = std::sqrt(s11 / det);
  }
  if (fit.sigma2 < 0.0) {
    fit.clamped = true;
    fit.sigma2 = 0.0;
    fit.inv_tau_c = b1 / s11;
  }
  if (fit.inv_tau_c < 0.0) {
    fit.clamped = true;
    fit.inv_tau_c = 0.0;
    fit.sigma2 = std::max(0.0, b2 / s22);
  }
  fit.tau_c = fit.inv_tau_c > 0.0 ? 1.0 / fit.inv_tau_c : std::numeric_limits<double>::infinity();
  fit.sigma_omega = std::sqrt(fit.sigma2);
  return fit;
}

}  // namespace photocoh::analysis
