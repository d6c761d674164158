#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"
#include "photocoh/screen.hpp"
#include "support.hpp"

using namespace photocoh;
using namespace photocoh::screen;

namespace {

const double kE = ev_to_joule(2.0);
const double kW = energy_to_omega(kE);
const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("measure_energy") {
  DetectorArray arr;
  arr.pitch = 1e-5;

  SUBCASE("delta limit") {
    const spectral::WavePacket p{kW, kInf, 0.0, 0.0};
    for (std::uint64_t i = 0; i < 50; ++i) {
      CounterStream st(1, i, Substream::kEnergy);
      const auto e = measure_energy(p, arr, st);
      CHECK(e.e_true == doctest::Approx(omega_to_energy(kW)).epsilon(1e-15));
      CHECK(e.e_meas == e.e_true);
    }
  }
  SUBCASE("absorbed energy follows the truncated Lorentzian") {
    const double tc = 3e-15;  // wide enough for truncation to matter
    const spectral::WavePacket p{kW, tc, 0.0, 0.0};
    const double e0 = omega_to_energy(kW), gam = kHbar / tc;
    const double a = std::atan(e0 / gam);
    std::vector<double> xs;
    xs.reserve(1000000);
    for (std::uint64_t i = 0; i < 1000000; ++i) {
      CounterStream st(2, i, Substream::kEnergy);
      const auto e = measure_energy(p, arr, st);
      CHECK_UNARY(e.e_true > 0.0);
      CHECK_UNARY(e.e_true < 2.0 * e0);
      xs.push_back(e.e_true);
    }
    const double d = testing::ks_distance(xs, [&](double x) { return (std::atan((x - e0) / gam) + a) / (2.0 * a); });
    CHECK(d < 0.002);
  }
  SUBCASE("detector noise variance") {
    arr.sigma_e = ev_to_joule(0.01);
    const spectral::WavePacket p{kW, 1e-12, 0.0, 0.0};
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      CounterStream st(3, static_cast<std::uint64_t>(i), Substream::kEnergy);
      const auto e = measure_energy(p, arr, st);
      const double d = (e.e_meas - e.e_true) / arr.sigma_e;
      s += d;
      s2 += d * d;
    }
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("registration band") {
  // dyadic values so that centre +- half_width is exact
  const RegistrationBand band{1.0, 0.25};
  DetectionEvent ev;
  ev.e_meas = 1.0;
  CHECK(registers(ev, band));
  ev.e_meas = 1.25;
  CHECK(registers(ev, band));
  ev.e_meas = 0.75;
  CHECK(registers(ev, band));
  ev.e_meas = std::nextafter(1.25, 2.0);
  CHECK_FALSE(registers(ev, band));
  ev.e_meas = std::nextafter(0.75, 0.0);
  CHECK_FALSE(registers(ev, band));
  CHECK(RegistrationBand{kE, 1e-22}.delta_nu() == doctest::Approx(1e-22 / kPlanck));

  DetectionEvent a, b;
  a.e_meas = b.e_meas = 1.1;
  a.y = -1.0;
  b.y = 3.0;
  a.pixel = 0;
  b.pixel = 99;
  CHECK(registers(a, band) == registers(b, band));

  CHECK_THROWS_AS(RegistrationBand({kE, 0.0}).validate(), DomainError);
  CHECK(RegistrationBand{kE, kInf}.contains(1e-30));
}

TEST_CASE("bandwidth constraint") {
  const double tc = 1e-12;
  const spectral::SourceModel src{spectral::SpectralWeight::line(kE), {tc, kE, 0.0}, 0.0};
  auto band_at = [&](double frac) { return RegistrationBand{kE, kPlanck * frac / tc}; };
  CHECK(check_bandwidth_constraint(band_at(0.01), src).status == BandStatus::kOk);
  CHECK(check_bandwidth_constraint(band_at(1.0), src).status == BandStatus::kWarn);
  const auto edge = check_bandwidth_constraint(band_at(0.1), src);
  CHECK(edge.status == BandStatus::kOk);
  CHECK(edge.ratio == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(to_string(BandStatus::kWarn) == "warn");
}

TEST_CASE("photoluminescent screen") {
  const PhotoluminescentScreen pl{kE, 1e-22, 0.5};
  const auto b = pl.band();
  CHECK(b.center == kE);
  CHECK(b.half_width == doctest::Approx(0.5e-22));
  CHECK_THROWS_AS(PhotoluminescentScreen({kE, 1e-22, 0.0}).validate(), DomainError);
}

TEST_CASE("detector array") {
  DetectorArray arr;
  arr.pitch = 0.0;
  CHECK_THROWS_AS(arr.validate(), DomainError);
  arr.pitch = 1e-5;
  arr.n_pixels = 1;
  CHECK_THROWS_AS(arr.validate(), DomainError);
  arr.n_pixels = 256;
  arr.quantum_efficiency = 1.5;
  CHECK_THROWS_AS(arr.validate(), DomainError);
  arr.quantum_efficiency = 1.0;
  const optics::DoubleSlit ds{1e-3, 1.0, 0.0, true};
  arr.pitch = omega_to_wavelength(kW) * 1.0 / 1e-3 / 8.0;
  CHECK(pixels_per_fringe(arr, ds, kW) == doctest::Approx(8.0));
}
