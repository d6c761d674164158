#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "photocoh/commands.hpp"
#include "photocoh/config.hpp"
#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"
#include "support.hpp"

using namespace photocoh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const double kP = kTwoPi / energy_to_omega(ev_to_joule(2.0));

json simple_doc() {
  return json::parse(R"({
    "source": {"lines": [{"energy_ev": 2.0, "weight": 1.0}], "tau_c_s": 2.0e-14},
    "geometry": {"type": "michelson", "tau_min_s": -4.0e-14, "tau_max_s": 4.0e-14},
    "detector": {"n_pixels": 160},
    "mode": {"type": "detections_filter", "bands": [{"center_ev": 2.0, "delta_nu_hz": 1.0e12}]},
    "run": {"n_photons": 200000, "seed": 3, "workers": 2},
    "analysis": {"threshold": 0.36787944117144233, "estimator": "count"}
  })");
}

int run_cli(const std::string& args, std::string* err = nullptr) {
  const auto log = fs::temp_directory_path() / "photocoh_cli_stderr.txt";
  const std::string cmd = std::string(PHOTOCOH_CLI) + " " + args + " >/dev/null 2>" + log.string();
  const int status = std::system(cmd.c_str());
  if (err) *err = testing::slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_doc(const json& j, const std::string& name) {
  const auto dir = testing::temp_dir("cli_" + name);
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("config round trip") {
  const auto a = cli::parse_config(simple_doc());
  const auto b = cli::parse_config(a.doc);
  CHECK(a.doc == b.doc);
  CHECK(b.doc.dump() == cli::parse_config(b.doc).doc.dump());
  CHECK(a.run->seed == 3);
  CHECK(a.run->array.pitch == doctest::Approx(8.0e-14 / 160.0));
  // defaults are filled in
  CHECK(a.doc["detector"]["quantum_efficiency"] == 1.0);
  CHECK_FALSE(a.experiment_echo()["run"].contains("workers"));
}

TEST_CASE("config errors name the offending key") {
  auto doc = simple_doc();
  doc["source"]["pressure"] = 3.0;
  try {
    cli::parse_config(doc);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "source.pressure");
  }
  doc = simple_doc();
  doc["mode"]["bands"][0]["delta_nu_hz"] = -1.0;
  CHECK_THROWS_WITH_AS(cli::parse_config(doc), doctest::Contains("mode.bands[0].delta_nu_hz"), ConfigError);
  doc = simple_doc();
  doc["geometry"]["type"] = "triple_slit";
  CHECK_THROWS_AS(cli::parse_config(doc), ConfigError);
  doc = simple_doc();
  doc["source"]["gas"] = {{"pressure_pa", 1.0}, {"temperature_k", 300.0}, {"cross_section_m2", 1e-19}};
  CHECK_THROWS_AS(cli::parse_config(doc), ConfigError);  // tau_c_s and gas together
}

TEST_CASE("gas source and pressure override") {
  auto doc = simple_doc();
  doc["source"].erase("tau_c_s");
  doc["source"]["gas"] = {{"pressure_pa", 1e5}, {"temperature_k", 300.0}, {"cross_section_m2", 1e-19}};
  const auto cfg = cli::parse_config(doc);
  const double t1 = cfg.run->source.coherence.tau_ref;
  CHECK(cli::source_at_pressure(cfg, 2e5).coherence.tau_ref == doctest::Approx(0.5 * t1).epsilon(1e-14));
}

TEST_CASE("simulate writes reproducible outputs") {
  const auto doc = simple_doc();
  auto cfg = cli::parse_config(doc);
  const auto d1 = testing::temp_dir("sim_a"), d2 = testing::temp_dir("sim_b");
  std::ostringstream log;
  CHECK(cli::simulate(cfg, d1.string(), log) == cli::kExitOk);
  cli::apply_overrides(cfg, std::nullopt, 5u);
  CHECK(cli::simulate(cfg, d2.string(), log) == cli::kExitOk);
  for (const char* f : {"histogram_band0.tsv", "visibility_band0.tsv", "summary.tsv", "metadata.tsv"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(testing::slurp(d1 / f) == testing::slurp(d2 / f));
  }
  const auto hist = testing::slurp(d1 / "histogram_band0.tsv");
  CHECK(hist.find("# config: ") != std::string::npos);
  CHECK(testing::slurp(d1 / "metadata.tsv").find("band0.bandwidth_ratio") != std::string::npos);

  SUBCASE("analyze reproduces the summary from the histogram") {
    const auto d3 = testing::temp_dir("sim_c");
    fs::copy(d1 / "histogram_band0.tsv", d3 / "histogram_band0.tsv");
    CHECK(cli::analyze(cfg, {}, d3.string(), log) == cli::kExitOk);
    CHECK(testing::slurp(d3 / "visibility_band0.tsv") == testing::slurp(d1 / "visibility_band0.tsv"));
  }
}

TEST_CASE("compare-filters limits") {
  SUBCASE("broadband: both modes agree on tau_s") {
    auto doc = simple_doc();
    const double tc = 4.0 * kP;
    doc["source"]["tau_c_s"] = tc;
    doc["geometry"] = {{"type", "michelson"}, {"tau_min_s", 0.0}, {"tau_max_s", 12.0 * kP}};
    doc["detector"]["n_pixels"] = 192;
    doc["compare"] = {{"bandwidth_hz", 100.0 / tc}};
    doc["analysis"]["estimator"] = "crossing";
    doc["run"]["n_photons"] = 600000;
    const auto r = cli::run_compare(cli::parse_config(doc), testing::temp_dir("cmp_broad").string());
    REQUIRE(r.optical_reached);
    REQUIRE(r.detections_reached);
    CHECK(std::abs(r.tau_optical / r.tau_detections - 1.0) < 0.15);
    CHECK(std::abs(r.tau_detections / tc - 1.0) < 0.15);
  }
  SUBCASE("monochromatic source reaches no envelope") {
    auto doc = simple_doc();
    doc["source"]["tau_c_s"] = "inf";
    doc["compare"] = {{"bandwidth_hz", 1e12}};
    doc["run"]["n_photons"] = 100000;
    const auto dir = testing::temp_dir("cmp_mono");
    const auto r = cli::run_compare(cli::parse_config(doc), dir.string());
    CHECK_FALSE(r.optical_reached);
    CHECK_FALSE(r.detections_reached);
    const auto rep = testing::slurp(dir / "compare.tsv");
    CHECK(rep.find("envelope not reached") != std::string::npos);
  }
}

TEST_CASE("command-line exit codes") {
  const auto good = write_doc(simple_doc(), "good");
  const auto out = good.parent_path() / "out";
  CHECK(run_cli("simulate --config " + good.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "histogram_band0.tsv"));

  auto bad = simple_doc();
  bad["detector"]["pixel_count"] = 10;
  std::string err;
  CHECK(run_cli("simulate --config " + write_doc(bad, "bad").string(), &err) == 2);
  CHECK(err.find("detector.pixel_count") != std::string::npos);

  auto empty = simple_doc();
  empty["mode"]["bands"][0]["center_ev"] = 1.0;
  empty["source"]["tau_c_s"] = "inf";  // a finite linewidth leaves Lorentzian tails in any band
  CHECK(run_cli("simulate --config " + write_doc(empty, "empty").string() + " --out " + out.string() + "_e", &err) == 3);
  CHECK_FALSE(err.empty());

  auto gas = simple_doc();
  gas["source"].erase("tau_c_s");
  gas["source"]["gas"] = {{"pressure_pa", 1e5}, {"temperature_k", 300.0}, {"cross_section_m2", 1e-19}};
  CHECK(run_cli("sweep --config " + write_doc(gas, "sweep1").string() + " --pressures 1e5", &err) == 2);

  CHECK(run_cli("simulate") == 2);
  CHECK(run_cli("simulate --config /nonexistent/config.json") == 2);
}

TEST_CASE("oracle subcommand") {
  json doc = {{"oracle", {{"modes", 128}, {"y_points", 32}, {"window_factors", {1, 2, 4}}}}};
  const auto p = write_doc(doc, "oracle");
  const auto out = p.parent_path() / "out";
  CHECK(run_cli("oracle --config " + p.string() + " --out " + out.string()) == 0);
  const auto sweep = testing::slurp(out / "oracle_sweep.tsv");
  CHECK(sweep.find("nonincreasing") != std::string::npos);
  CHECK(fs::exists(out / "oracle_pattern.tsv"));

  json tight = {{"oracle", {{"modes", 64}, {"y_points", 8}, {"detector_shift_per_t0", 1000.0}}}};
  CHECK(run_cli("oracle --config " + write_doc(tight, "oracle_empty").string() + " --out " + out.string()) == 3);
}
