#include <doctest.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"
#include "photocoh/oracle.hpp"

using namespace photocoh;
using namespace photocoh::oracle;

namespace {

const double kW = wavelength_to_omega(600e-9);
const double kP = kTwoPi / kW;
const double kT = 1000.0 * kP;
const optics::Michelson kMich{-20.0 * kP, 20.0 * kP};
const optics::DoubleSlit kSlit{1e-3, 1.0, 0.0, false};

PureState random_state(std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  PureState s;
  for (std::size_t k = 0; k < m; ++k) s.amp.emplace_back(n(rng), n(rng));
  s.normalize();
  return s;
}

MixtureState random_mixture(std::size_t m, std::size_t comps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  MixtureState rho;
  double tot = 0.0;
  for (std::size_t j = 0; j < comps; ++j) {
    rho.components.push_back({u(rng), random_state(m, rng)});
    tot += rho.components.back().p;
  }
  for (auto& c : rho.components) c.p /= tot;
  return rho;
}

ModeBasis small_basis() {
  // Detunings of a few 1/T around the transition.
  ModeBasis b;
  for (double d : {-3.1, -0.7, 0.4, 2.2}) b.omega.push_back(kW + d / kT);
  b.coeff = {1.0, {0.8, 0.3}, 1.2, {0.0, 0.9}};
  return b;
}

}  // namespace

TEST_CASE("state invariants") {
  std::mt19937_64 rng(1);
  const auto s = random_state(16, rng);
  CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-14));
  const auto basis = ModeBasis::uniform(kW * 0.9, kW * 1.1, 16);
  CHECK_NOTHROW(s.validate(basis));
  PureState bad = s;
  bad.amp[0] *= 2.0;
  CHECK_THROWS_AS(bad.validate(basis), DomainError);
  MixtureState rho{{{0.5, s}, {0.4, s}}};
  CHECK_THROWS_AS(rho.validate(basis), DomainError);
  ModeBasis nonmono = basis;
  std::swap(nonmono.omega[0], nonmono.omega[1]);
  CHECK_THROWS_AS(nonmono.validate(), DomainError);
  CHECK_THROWS_AS(ModeBasis::uniform(-1.0, 1.0, 4).validate(), DomainError);
}

TEST_CASE("g1_corr against a dense density-matrix trace") {
  std::mt19937_64 rng(2);
  const auto basis = small_basis();
  const TwoPathPropagator prop(kSlit);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_mixture(4, 3, rng);
    Eigen::Matrix4cd R = Eigen::Matrix4cd::Zero();
    for (const auto& c : rho.components) {
      Eigen::Vector4cd v;
      for (int k = 0; k < 4; ++k) v[k] = c.state.amp[static_cast<std::size_t>(k)];
      R += c.p * v * v.adjoint();
    }
    const double y = 1e-4 * trial;
    const double t1 = 0.37 * kT * trial, t2 = -0.21 * kT + 3.0 * kP;
    // E+(t) maps |1_k> to e_k(t)|0>; E-(t1) E+(t2) has matrix elements conj(e_k'(t1)) e_k(t2).
    Eigen::Vector4cd e1, e2;
    for (int k = 0; k < 4; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const cplx u = basis.coeff[kk] * prop.amplitude(basis.omega[kk], y);
      e1[k] = u * std::polar(1.0, -basis.omega[kk] * t1);
      e2[k] = u * std::polar(1.0, -basis.omega[kk] * t2);
    }
    const Eigen::Matrix4cd B = e1.conjugate() * e2.transpose();
    const cplx dense = (R * B).trace();
    const cplx g = g1_corr(rho, basis, prop, y, t1, t2);
    CHECK(std::abs(g - dense) <= 1e-10 * std::abs(dense));

    // Hermitian in the two times; real and nonnegative on the diagonal.
    const cplx gr = g1_corr(rho, basis, prop, y, t2, t1);
    CHECK(std::abs(g - std::conj(gr)) <= 1e-12 * std::abs(g));
    const cplx d = g1_corr(rho, basis, prop, y, t1, t1);
    CHECK(std::abs(d.imag()) <= 1e-12 * std::abs(d.real()));
    CHECK(d.real() >= 0.0);
  }
}

TEST_CASE("single mode, single state") {
  ModeBasis b;
  b.omega = {kW};
  b.coeff = {{0.6, 0.8}};
  const TwoPathPropagator prop(kSlit);
  const MixtureState rho{{{1.0, PureState{{cplx(0.6, 0.8)}}}}};
  const double y = 1.3e-4;
  const double expect = std::norm(b.coeff[0] * rho.components[0].state.amp[0] * prop.amplitude(kW, y));
  for (double t : {0.0, 1e-13, -7e-12}) CHECK(std::abs(g1_corr(rho, b, prop, y, t, t) - expect) < 1e-12 * expect);
  CHECK(std::abs(prop.amplitude(kW, y)) <= 2.0 + 1e-15);
}

TEST_CASE("two-path propagator") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uy(-5e-3, 5e-3), uw(0.5 * kW, 2 * kW);
  const TwoPathPropagator slit(kSlit), mich(kMich);
  for (int i = 0; i < 1000; ++i) {
    const double w = uw(rng), y = uy(rng);
    CHECK(std::abs(slit.amplitude(w, y)) <= 2.0 + 1e-14);
    CHECK(std::abs(mich.amplitude(w, y * 1e-11)) <= 2.0 + 1e-14);
    // |u|^2 = 2 + 2 cos(w tau_d)
    const double tau = optics::path_delay(kSlit, y);
    CHECK(std::norm(slit.amplitude(w, y)) == doctest::Approx(2.0 + 2.0 * std::cos(w * tau)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("window integral and energy-conservation kernel") {
  CHECK(std::abs(window_integral(0.0, 0.0, kT) - cplx(kT, 0.0)) < 1e-12 * kT);
  CHECK(std::abs(window_integral(1e-9 / kT, 0.0, kT) - cplx(kT, 0.5e-9 * kT)) < 1e-12 * kT);
  for (double x : {1e-7, 0.3, 7.0, 100.0}) {
    const double d = x / kT;
    const cplx f = window_integral(d, 0.2 * kT, 1.2 * kT);
    const cplx closed = (std::polar(1.0, d * 1.2 * kT) - std::polar(1.0, d * 0.2 * kT)) / cplx(0.0, d);
    CHECK(std::abs(f - closed) <= 1e-9 * std::abs(closed));
    CHECK(window_response(d, kT) == doctest::Approx(std::norm(closed)).epsilon(1e-9));
    CHECK(window_response(d, kT) == doctest::Approx(4 * std::pow(std::sin(x / 2), 2) / (d * d)).epsilon(1e-12));
  }
  // detuned by 2 pi n / T: exact zero of the kernel
  for (int n = 1; n <= 3; ++n) {
    ModeBasis b;
    b.omega = {kW + kTwoPi * n / kT};
    b.coeff = {1.0};
    const MixtureState rho{{{1.0, PureState{{1.0}}}}};
    const TwoLevelDetector det{kW, 1.0, 0.0, kT};
    const double p = transition_probability(rho, b, TwoPathPropagator(kMich), det, 0.0);
    CHECK(p < 1e-20 * kT * kT);
  }
}

TEST_CASE("transition probability") {
  const TwoLevelDetector det{kW, 1.0, 0.0, kT};

  SUBCASE("resonant single mode gives cos^2 fringes scaled by T^2") {
    ModeBasis b;
    b.omega = {kW};
    b.coeff = {1.0};
    const MixtureState rho{{{1.0, PureState{{1.0}}}}};
    const TwoPathPropagator prop(kMich);
    for (double tau : {0.0, 0.25 * kP, 0.5 * kP, 3.1 * kP}) {
      const double p = transition_probability(rho, b, prop, det, tau);
      CHECK(p == doctest::Approx(4.0 * std::pow(std::cos(0.5 * kW * tau), 2) * kT * kT).epsilon(1e-9).scale(kT * kT));
    }
  }

  SUBCASE("2048^2 quadrature of the double time integral") {
    std::mt19937_64 rng(4);
    const auto basis = small_basis();
    const TwoPathPropagator prop(kSlit);
    const auto rho = random_mixture(4, 2, rng);
    const double y = 2.3e-4;
    const TwoLevelDetector d2{kW, 1.0, 0.1 * kT, 1.1 * kT};
    const int n = 2048;
    const double h = d2.window() / n;
    // Both integrals factor through the same one-dimensional sampled amplitude,
    // but the oracle sums the full 2-D grid of G1(t', t'') values.
    std::vector<cplx> phase(n);
    for (int i = 0; i < n; ++i) phase[static_cast<std::size_t>(i)] = std::polar(1.0, d2.omega_ag * (d2.t0 + (i + 0.5) * h));
    cplx acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t1 = d2.t0 + (i + 0.5) * h;
      for (int j = 0; j < n; ++j) {
        const double t2 = d2.t0 + (j + 0.5) * h;
        acc += std::conj(phase[static_cast<std::size_t>(i)]) * phase[static_cast<std::size_t>(j)] *
               g1_corr(rho, basis, prop, y, t1, t2);
      }
    }
    const double quad = acc.real() * h * h;
    const double p = transition_probability(rho, basis, prop, d2, y);
    CHECK(std::abs(p - quad) <= 1e-4 * p);
  }

  SUBCASE("invariant under global phases and dipole rescaling up to a constant") {
    std::mt19937_64 rng(5);
    const auto basis = small_basis();
    const TwoPathPropagator prop(kSlit);
    auto rho = random_mixture(4, 3, rng);
    std::vector<double> ys = {0.0, 1e-4, 2e-4, 3e-4, 4.5e-4};
    std::vector<double> p0;
    for (double y : ys) p0.push_back(transition_probability(rho, basis, prop, det, y));
    for (auto& c : rho.components)
      for (auto& a : c.state.amp) a *= std::polar(1.0, 1.234);
    TwoLevelDetector d3 = det;
    d3.dipole = 3.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      CHECK(transition_probability(rho, basis, prop, det, ys[i]) == doctest::Approx(p0[i]).epsilon(1e-12));
      CHECK(transition_probability(rho, basis, prop, d3, ys[i]) == doctest::Approx(9.0 * p0[i]).epsilon(1e-12));
    }
  }

  SUBCASE("detuned pure state against the closed form") {
    ModeBasis b;
    b.omega = {kW, kW + 100.0 / kT};
    b.coeff = {1.0, 1.0};
    const TwoPathPropagator prop(kMich);
    const MixtureState on{{{1.0, PureState{{1.0, 0.0}}}}}, off{{{1.0, PureState{{0.0, 1.0}}}}};
    const double r = transition_probability(off, b, prop, det, 0.0) / transition_probability(on, b, prop, det, 0.0);
    const double closed = window_response(100.0 / kT, kT) / (kT * kT);
    CHECK(r < 1e-3);
    CHECK(std::abs(r - closed) <= 1e-10 * closed);
  }
}

TEST_CASE("effective density") {
  const auto basis = ModeBasis::uniform(0.98 * kW, 1.02 * kW, 401);
  const double es = omega_to_energy(kW);
  auto narrow = [&](double w0) { return lorentzian_state(basis, w0, 2e4 * kP, 0.0, w0 - 0.002 * kW, w0 + 0.002 * kW); };

  SUBCASE("everything inside the band") {
    const MixtureState rho{{{0.3, narrow(kW)}, {0.7, narrow(1.001 * kW)}}};
    const auto eff = effective_density(rho, basis, es, 0.02 * es, 0.1);
    REQUIRE(eff.components.size() == 2);
    CHECK(eff.components[0].p == doctest::Approx(0.3));
    CHECK(eff.components[1].p == doctest::Approx(0.7));
  }
  SUBCASE("two disjoint narrow states, band on the first") {
    const MixtureState rho{{{0.3, narrow(kW)}, {0.7, narrow(1.01 * kW)}}};
    const auto eff = effective_density(rho, basis, es, 0.003 * es, 0.1);
    REQUIRE(eff.components.size() == 1);
    CHECK(eff.components[0].p == 1.0);
    CHECK(eff.components[0].state.amp == rho.components[0].state.amp);
  }
  SUBCASE("graded mixture against exhaustive in-band masses") {
    MixtureState rho;
    for (int j = 0; j < 9; ++j) {
      const double w0 = kW * (0.985 + 0.00375 * j);
      rho.components.push_back({1.0 / 9.0, lorentzian_state(basis, w0, 300.0 * kP)});
    }
    const double de = 0.004 * es, eps = 1e-6;
    const auto eff = effective_density(rho, basis, es, de, eps);
    std::size_t kept = 0;
    for (const auto& c : rho.components) {
      double m = 0.0;
      for (std::size_t k = 0; k < basis.size(); ++k)
        if (std::abs(omega_to_energy(basis.omega[k]) - es) <= de) m += std::norm(c.state.amp[k]);
      if (m > eps) ++kept;
    }
    CHECK(eff.components.size() == kept);
    double tot = 0.0;
    for (const auto& c : eff.components) tot += c.p;
    CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("nothing survives") {
    const MixtureState rho{{{1.0, narrow(1.01 * kW)}}};
    CHECK_THROWS_AS(effective_density(rho, basis, es, 0.001 * es, 0.1), EmptyResultError);
    CHECK_THROWS_AS(effective_density(rho, basis, es, 0.001 * es, 1.0), DomainError);
  }
}

TEST_CASE("p_of_y") {
  std::vector<double> taus;
  for (int i = 0; i < 400; ++i) taus.push_back(-20.0 * kP + i * 0.1 * kP);
  const TwoPathPropagator prop(kMich);

  SUBCASE("single resonant mode is a normalized cos^2 profile") {
    ModeBasis b;
    b.omega = {kW};
    b.coeff = {1.0};
    const auto p = p_of_y(MixtureState{{{1.0, PureState{{1.0}}}}}, b, prop, taus);
    double norm = 0.0;
    for (double t : taus) norm += std::pow(std::cos(0.5 * kW * t), 2);
    for (std::size_t i = 0; i < taus.size(); ++i)
      CHECK(p[i] == doctest::Approx(std::pow(std::cos(0.5 * kW * taus[i]), 2) / norm).epsilon(1e-12).scale(1e-3));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two-mode superposition beats with its first null at tau dw = pi") {
    const double dw = kW / 100.0;  // null at 50 carrier periods, flat across one of them
    ModeBasis b;
    b.omega = {kW - 0.5 * dw, kW + 0.5 * dw};
    b.coeff = {1.0, 1.0};
    const double r = 1.0 / std::sqrt(2.0);
    const MixtureState rho{{{1.0, PureState{{r, r}}}}};
    // closed form: 1 + cos(dw tau / 2) cos(w tau)
    std::vector<double> fine;
    for (int i = 0; i < 6000; ++i) fine.push_back(i * 0.01 * kP);
    const auto p = p_of_y(rho, b, prop, fine);
    double norm = 0.0;
    for (double t : fine) norm += 1.0 + std::cos(0.5 * dw * t) * std::cos(kW * t);
    for (std::size_t i = 0; i < fine.size(); i += 7)
      CHECK(p[i] * norm == doctest::Approx(1.0 + std::cos(0.5 * dw * fine[i]) * std::cos(kW * fine[i])).epsilon(1e-10).scale(1.0));
    // local visibility vanishes in the carrier period around tau = pi / dw
    const double t_null = std::numbers::pi / dw;
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i)
      if (std::abs(fine[i] - t_null) < 0.5 * kP) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
    CHECK((hi - lo) / (hi + lo) < 0.02);
  }
  SUBCASE("nonnegative for random mixtures") {
    std::mt19937_64 rng(6);
    const auto basis = ModeBasis::uniform(0.9 * kW, 1.1 * kW, 12);
    for (int t = 0; t < 100; ++t) {
      const auto rho = random_mixture(12, 1 + t % 4, rng);
      for (double v : p_of_y(rho, basis, prop, taus)) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("equivalence check") {
  SUBCASE("default desk scenario and window sweep") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = desk_scenario();
    const std::vector<double> f = {1, 2, 4, 8, 16};
    const auto sw = equivalence_sweep(s, f);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(sw.rows.front().discrepancy < 1e-2);
    CHECK(sw.nonincreasing);
    CHECK(secs < 10.0);
    // the two detuned components carry no band mass
    const double es = omega_to_energy(s.detector.omega_ag);
    CHECK(in_band_mass(s.rho.components[2].state, s.basis, es - s.delta_e, es + s.delta_e) < 1e-12);
    CHECK(in_band_mass(s.rho.components[0].state, s.basis, es - s.delta_e, es + s.delta_e) > 0.99);
  }
  SUBCASE("state entirely inside the band") {
    auto s = desk_scenario();
    s.rho.components.resize(2);
    s.rho.components[0].p = s.rho.components[1].p = 0.5;
    const TwoPathPropagator prop(s.geometry);
    const double d = equivalence_check(s.rho, s.basis, prop, s.detector, s.delta_e, s.y, s.eps);
    CHECK(d < 1e-3);
  }
  SUBCASE("mode halving changes the in-band pattern little") {
    const auto a = desk_scenario(256, 64), b = desk_scenario(128, 64);
    const TwoPathPropagator pa(a.geometry), pb(b.geometry);
    const double es = omega_to_energy(a.detector.omega_ag);
    const auto qa = p_of_y(effective_density(a.rho, a.basis, es, a.delta_e, a.eps), a.basis, pa, a.y);
    const auto qb = p_of_y(effective_density(b.rho, b.basis, es, b.delta_e, b.eps), b.basis, pb, b.y);
    double sup = 0.0;
    for (std::size_t i = 0; i < qa.size(); ++i) sup = std::max(sup, std::abs(qa[i] - qb[i]));
    CHECK(sup < 1e-3);
  }
}
