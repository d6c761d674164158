#include "photocoh/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "photocoh/constants.hpp"
#include "photocoh/engine.hpp"
#include "photocoh/error.hpp"
#include "photocoh/oracle.hpp"

namespace photocoh::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return fmt::format("{}", x);
}

namespace {

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

json band_json(const screen::RegistrationBand& b) {
  json j;
  j["center_ev"] = joule_to_ev(b.center);
  j["half_width_ev"] = std::isinf(b.half_width) ? json("inf") : json(joule_to_ev(b.half_width));
  return j;
}

screen::RegistrationBand band_from_json(const json& j) {
  screen::RegistrationBand b;
  b.center = ev_to_joule(j.at("center_ev").get<double>());
  const json& h = j.at("half_width_ev");
  b.half_width = h.is_string() ? std::numeric_limits<double>::infinity() : ev_to_joule(h.get<double>());
  return b;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

void write_histogram(const fs::path& p, const json& echo, const screen::RegistrationBand& band,
                     const engine::FringePattern& pat, const optics::PixelGrid& grid) {
  auto out = open_out(p);
  out << "# photocoh histogram\n";
  out << "# config: " << echo.dump() << "\n";
  out << "# band: " << band_json(band).dump() << "\n";
  out << "# n_registered: " << pat.n_registered << "\n";
  out << "# n_incident: " << pat.n_incident << "\n";
  out << "# empty: " << yes_no(pat.empty) << "\n";
  out << "# pixel_index\ty_center\tcount\n";
  for (std::size_t i = 0; i < pat.counts.size(); ++i)
    out << i << '\t' << format_number(grid.center(i)) << '\t' << pat.counts[i] << '\n';
}

void write_events(const fs::path& p, const std::vector<screen::DetectionEvent>& events) {
  auto out = open_out(p);
  out << "# photocoh events\n";
  out << "# pixel\ty\te_true_ev\te_meas_ev\tpacket_id\n";
  for (const auto& e : events)
    out << e.pixel << '\t' << format_number(e.y) << '\t' << format_number(joule_to_ev(e.e_true)) << '\t'
        << format_number(joule_to_ev(e.e_meas)) << '\t' << e.packet_id << '\n';
}

void write_visibility(const fs::path& p, const BandSummary& s) {
  auto out = open_out(p);
  out << "# photocoh visibility\n";
  if (!s.have_profile) out << "# unavailable: " << s.note << "\n";
  out << "# tau_d_s\tV\tV_err\tclamped\n";
  if (!s.have_profile) return;
  for (std::size_t i = 0; i < s.profile.tau.size(); ++i)
    out << format_number(s.profile.tau[i]) << '\t' << format_number(s.profile.v[i]) << '\t'
        << format_number(s.profile.v_err[i]) << '\t' << (s.profile.clamped[i] ? 1 : 0) << '\n';
}

constexpr const char* kSummaryHeader =
    "# band\tcenter_ev\thalf_width_ev\tn_registered\tn_incident\tn_f\tl_s_m\ttau_s_s\tmethod\t"
    "envelope_reached\tone_sided\ttau_c_fit_s\tsigma_omega_fit_rad_s\tfit_clamped\tnote\n";

std::string summary_row(std::size_t b, const screen::RegistrationBand& band, std::uint64_t n_reg,
                        std::uint64_t n_inc, const BandSummary& s) {
  std::string n_f = "nan", l = "nan", t = "nan", method = "none", tc = "nan", sg = "nan", fc = "-";
  if (s.have_profile) n_f = format_number(s.count.n_f);
  if (s.estimate) {
    n_f = format_number(s.estimate->n_f);
    l = format_number(s.estimate->l_s);
    t = format_number(s.estimate->tau_s);
    method = s.estimate->method;
  }
  if (s.fit) {
    tc = format_number(s.fit->tau_c);
    sg = format_number(s.fit->sigma_omega);
    fc = yes_no(s.fit->clamped);
  }
  const std::string hw = std::isinf(band.half_width) ? "inf" : format_number(joule_to_ev(band.half_width));
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", b,
                     format_number(joule_to_ev(band.center)), hw, n_reg, n_inc, n_f, l, t, method,
                     s.have_profile ? yes_no(s.count.envelope_reached) : "-",
                     s.have_profile ? yes_no(s.count.one_sided) : "-", tc, sg, fc,
                     s.note.empty() ? "-" : s.note);
}

struct Outputs {
  std::vector<BandSummary> summaries;
  bool all_empty = true;
};

// Histograms, visibility tables, summary and metadata for one engine run.
Outputs write_run(const ExperimentConfig& cfg, const engine::RunConfig& rc, const engine::RunResult& res,
                  const fs::path& dir) {
  Outputs o;
  const json echo = cfg.experiment_echo();
  const auto grid = rc.array.grid();
  std::string summary = "# photocoh summary\n";
  summary += kSummaryHeader;
  for (std::size_t b = 0; b < res.patterns.size(); ++b) {
    const auto& p = res.patterns[b];
    write_histogram(dir / fmt::format("histogram_band{}.tsv", b), echo, p.band, p, grid);
    if (rc.record_events) write_events(dir / fmt::format("events_band{}.tsv", b), res.events[b]);
    std::vector<double> counts(p.counts.begin(), p.counts.end());
    BandSummary s;
    if (p.empty) {
      s.note = "no registered events";
    } else {
      o.all_empty = false;
      s = summarize_band(counts, p.band, rc.geometry, grid, cfg.analysis);
    }
    write_visibility(dir / fmt::format("visibility_band{}.tsv", b), s);
    summary += summary_row(b, p.band, p.n_registered, p.n_incident, s);
    o.summaries.push_back(std::move(s));
  }
  open_out(dir / "summary.tsv") << summary;

  auto meta = open_out(dir / "metadata.tsv");
  const auto& m = res.metadata;
  meta << "# photocoh metadata\n# key\tvalue\n";
  meta << "seed\t" << m.seed << "\n";
  meta << "n_photons\t" << m.n_photons << "\n";
  meta << "n_incident\t" << m.n_incident << "\n";
  meta << "transmitted_fraction\t" << format_number(m.transmitted_fraction) << "\n";
  for (std::size_t b = 0; b < m.bands.size(); ++b) {
    meta << "band" << b << ".bandwidth_ratio\t" << format_number(m.bands[b].check.ratio) << "\n";
    meta << "band" << b << ".bandwidth_check\t" << screen::to_string(m.bands[b].check.status) << "\n";
    meta << "band" << b << ".acceptance_fraction\t" << format_number(m.bands[b].acceptance_fraction) << "\n";
  }
  for (const auto& w : m.warnings) meta << "warning\t" << w << "\n";
  return o;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double cxx = sxx - sx * sx / n;
  const double cxy = sxy - sx * sy / n;
  const double cyy = syy - sy * sy / n;
  if (cxx <= 0.0 || cyy <= 0.0) return 0.0;
  return cxy * cxy / (cxx * cyy);
}

double screen_max_delay(const engine::RunConfig& rc) {
  const auto g = rc.array.grid();
  return std::max(std::abs(optics::path_delay(rc.geometry, g.edge(0))),
                  std::abs(optics::path_delay(rc.geometry, g.y_max())));
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<unsigned> workers) {
  if (!cfg.run) return;
  if (seed) {
    cfg.run->seed = *seed;
    cfg.doc["run"]["seed"] = *seed;
  }
  if (workers) {
    if (*workers < 1) throw ConfigError("--workers", "must be >= 1");
    cfg.run->workers = *workers;
    cfg.doc["run"]["workers"] = *workers;
  }
}

BandSummary summarize_band(std::span<const double> counts, const screen::RegistrationBand& band,
                           const optics::Geometry& geom, const optics::PixelGrid& grid,
                           const AnalysisSettings& settings) {
  BandSummary s;
  const double omega = energy_to_omega(band.center);
  const double lambda = omega_to_wavelength(omega);
  try {
    s.profile = analysis::visibility_profile(counts, geom, grid, omega);
    s.have_profile = true;
  } catch (const EstimatorError& e) {
    s.note = e.what();
    return s;
  }
  s.count = analysis::count_fringes(s.profile, settings.threshold);
  std::vector<std::string> notes;
  if (!s.count.envelope_reached) notes.push_back("envelope not reached");
  if (settings.estimator == Estimator::kCrossing && s.count.envelope_reached) {
    try {
      s.estimate = analysis::envelope_crossing(s.profile, lambda, settings.threshold);
    } catch (const EstimatorError& e) {
      notes.push_back(e.what());
    }
  }
  if (!s.estimate && s.count.n_f >= 1.0) s.estimate = analysis::coherence_from_count(s.count.n_f, lambda);
  try {
    s.fit = analysis::fit_voigt_envelope(s.profile);
  } catch (const EstimatorError& e) {
    notes.push_back(e.what());
  }
  for (std::size_t i = 0; i < notes.size(); ++i) s.note += (i ? "; " : "") + notes[i];
  return s;
}

int simulate(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const auto& rc = cfg.require_run();
  const auto res = engine::run(rc);
  const auto o = write_run(cfg, rc, res, out_dir);
  for (const auto& w : res.metadata.warnings) log << "warning: " << w << "\n";
  if (o.all_empty) {
    log << "error: no band registered any event; the registration band does not overlap the source\n";
    return kExitEmpty;
  }
  log << "simulate: " << res.patterns.size() << " band(s) written to " << out_dir << "\n";
  return kExitOk;
}

CompareReport run_compare(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto& base = cfg.require_run();
  if (!cfg.compare) throw ConfigError("compare", "compare-filters needs a compare section with bandwidth_hz");
  const auto& parts = base.source.weight.parts();
  if (parts.size() != 1 || !std::holds_alternative<spectral::SpectralLine>(parts[0]))
    throw ConfigError("source.lines", "compare-filters needs exactly one source line and no continuum");
  const double e_line = std::get<spectral::SpectralLine>(parts[0]).energy;
  const double dnu_b = cfg.compare->bandwidth_hz;

  engine::RunConfig optical = base;
  optical.mode = engine::OpticalFilterMode{spectral::FilterSpec{e_line, dnu_b, cfg.compare->shape}};
  engine::RunConfig detections = base;
  // same full width as the optical passband
  detections.mode = engine::DetectionsFilterMode{{screen::RegistrationBand{e_line, 0.5 * kPlanck * dnu_b}}};

  auto one = [&](const engine::RunConfig& rc, const std::string& sub, double& tau, bool& reached,
                 std::uint64_t& registered) {
    const auto res = engine::run(rc);
    const auto o = write_run(cfg, rc, res, fs::path(out_dir) / sub);
    registered = res.patterns[0].n_registered;
    if (o.all_empty) throw EmptyResultError(sub + " run registered no events");
    const auto& bs = o.summaries[0];
    reached = bs.have_profile && bs.count.envelope_reached && bs.estimate.has_value();
    tau = reached ? bs.estimate->tau_s : screen_max_delay(rc);
  };
  CompareReport r;
  r.tau_source = base.source.coherence(e_line);
  one(optical, "optical", r.tau_optical, r.optical_reached, r.optical_registered);
  one(detections, "detections", r.tau_detections, r.detections_reached, r.detections_registered);

  std::string report;
  report += "# photocoh compare-filters\n# key\tvalue\n";
  report += "bandwidth_hz\t" + format_number(dnu_b) + "\n";
  report += "tau_source_s\t" + format_number(r.tau_source) + "\n";
  report += "tau_optical_s\t" + format_number(r.tau_optical) + "\n";
  report += "optical_envelope\t" + std::string(r.optical_reached ? "reached" : "envelope not reached") + "\n";
  report += "optical_registered\t" + std::to_string(r.optical_registered) + "\n";
  report += "tau_detections_s\t" + format_number(r.tau_detections) + "\n";
  report += "detections_envelope\t" + std::string(r.detections_reached ? "reached" : "envelope not reached") + "\n";
  report += "detections_registered\t" + std::to_string(r.detections_registered) + "\n";
  const bool both = r.optical_reached && r.detections_reached;
  report += "ratio_optical_over_detections\t" +
            (both ? format_number(r.tau_optical / r.tau_detections) : std::string("n/a")) + "\n";
  open_out(fs::path(out_dir) / "compare.tsv") << report;
  return r;
}

int compare_filters(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  run_compare(cfg, out_dir);
  std::ifstream in(fs::path(out_dir) / "compare.tsv");
  log << in.rdbuf();
  return kExitOk;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<double>& pressures, const std::string& out_dir) {
  std::vector<double> ps = pressures.empty() ? cfg.sweep_pressures : pressures;
  if (ps.size() < 2) throw ConfigError("sweep.pressures_pa", "a sweep needs at least two pressures");
  const auto& base = cfg.require_run();
  if (!cfg.gas) throw ConfigError("source.gas", "a pressure sweep needs source.gas");
  std::sort(ps.begin(), ps.end());

  SweepReport rep;
  std::vector<double> inv_p, tau_s;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    engine::RunConfig rc = base;
    rc.source = source_at_pressure(cfg, ps[i]);
    const auto res = engine::run(rc);
    const auto o = write_run(cfg, rc, res, fs::path(out_dir) / fmt::format("p{}", i));
    if (o.all_empty) throw EmptyResultError("sweep point " + format_number(ps[i]) + " Pa registered no events");
    const auto& s = o.summaries[0];
    SweepPoint pt;
    pt.pressure = ps[i];
    pt.tau_c = rc.source.coherence.tau_ref;
    pt.n_f = s.have_profile ? s.count.n_f : 0.0;
    pt.tau_s = s.estimate ? s.estimate->tau_s : 0.0;
    pt.envelope_reached = s.have_profile && s.count.envelope_reached;
    rep.points.push_back(pt);
    inv_p.push_back(1.0 / ps[i]);
    tau_s.push_back(pt.tau_s);
  }
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (rep.points[i].n_f > rep.points[i - 1].n_f) rep.monotone = false;
  rep.r2 = linear_fit_r2(inv_p, tau_s);

  std::string table = "# photocoh sweep\n";
  table += "# temperature_k: " + format_number(cfg.gas->temperature) + "\n";
  table += "# monotone_decrease: " + yes_no(rep.monotone) + "\n";
  table += "# r2_tau_s_vs_inverse_pressure: " + format_number(rep.r2) + "\n";
  table += "# pressure_pa\ttau_c_s\tn_f\ttau_s_s\tenvelope_reached\n";
  for (const auto& p : rep.points)
    table += fmt::format("{}\t{}\t{}\t{}\t{}\n", format_number(p.pressure), format_number(p.tau_c), format_number(p.n_f),
                         format_number(p.tau_s), yes_no(p.envelope_reached));
  open_out(fs::path(out_dir) / "sweep.tsv") << table;
  return rep;
}

int sweep(const ExperimentConfig& cfg, const std::vector<double>& pressures, const std::string& out_dir,
          std::ostream& log) {
  const auto rep = run_sweep(cfg, pressures, out_dir);
  std::ifstream in(fs::path(out_dir) / "sweep.tsv");
  log << in.rdbuf();
  if (!rep.monotone) throw InvariantError("fringe count increased with pressure");
  return kExitOk;
}

int oracle(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const auto& o = cfg.oracle;
  auto shifted = [&o](oracle::DeskScenario d) {
    d.detector.omega_ag += o.detector_shift_per_t0 / d.detector.window();
    return d;
  };
  auto s = shifted(oracle::desk_scenario(o.modes, o.y_points));
  s.eps = o.eps;
  const oracle::TwoPathPropagator prop(s.geometry);
  const double e_s = omega_to_energy(s.detector.omega_ag);
  const auto eff = oracle::effective_density(s.rho, s.basis, e_s, s.delta_e, s.eps);
  const auto sweep = oracle::equivalence_sweep(s, o.window_factors);

  const auto py = oracle::p_of_y(eff, s.basis, prop, s.y);
  const auto band = oracle::band_pattern(s.rho, s.basis, prop, s.detector, energy_to_omega(s.delta_e), s.y);
  std::vector<double> tp(s.y.size());
  double tsum = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    tp[i] = oracle::transition_probability(s.rho, s.basis, prop, s.detector, s.y[i]);
    tsum += tp[i];
  }
  // grid-halving check of the mode discretization
  const auto coarse = shifted(oracle::desk_scenario(std::max<std::size_t>(8, o.modes / 2), o.y_points));
  const auto coarse_eff = oracle::effective_density(coarse.rho, coarse.basis, e_s, coarse.delta_e, s.eps);
  const auto py_coarse = oracle::p_of_y(coarse_eff, coarse.basis, oracle::TwoPathPropagator(coarse.geometry), coarse.y);
  double disc = 0.0;
  for (std::size_t i = 0; i < py.size(); ++i) disc = std::max(disc, std::abs(py[i] - py_coarse[i]));

  std::string pat = "# photocoh oracle pattern\n";
  pat += fmt::format("# modes: {}\n# components_kept: {} of {}\n", s.basis.size(), eff.components.size(),
                     s.rho.components.size());
  pat += "# mode_halving_sup_delta: " + format_number(disc) + "\n";
  pat += "# y\tp_of_y\tband_response\tp_transition\n";
  for (std::size_t i = 0; i < s.y.size(); ++i)
    pat += fmt::format("{}\t{}\t{}\t{}\n", format_number(s.y[i]), format_number(py[i]), format_number(band[i]),
                       format_number(tsum > 0.0 ? tp[i] / tsum : 0.0));
  open_out(fs::path(out_dir) / "oracle_pattern.tsv") << pat;

  std::string sw = "# photocoh oracle sweep\n";
  sw += "# nonincreasing: " + yes_no(sweep.nonincreasing) + "\n";
  sw += "# window_s\tdiscrepancy\n";
  for (const auto& r : sweep.rows) sw += format_number(r.window) + "\t" + format_number(r.discrepancy) + "\n";
  open_out(fs::path(out_dir) / "oracle_sweep.tsv") << sw;
  log << sw;
  return kExitOk;
}

int analyze(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, const std::string& out_dir,
            std::ostream& log) {
  std::vector<fs::path> files(inputs.begin(), inputs.end());
  if (files.empty()) {
    if (!fs::is_directory(out_dir)) throw ConfigError("--out", "no histogram directory '" + out_dir + "'");
    for (const auto& e : fs::directory_iterator(out_dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("histogram_band", 0) == 0 && e.path().extension() == ".tsv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw ConfigError("--input", "no histogram files to analyze");

  std::string summary = "# photocoh summary\n";
  summary += kSummaryHeader;
  for (std::size_t b = 0; b < files.size(); ++b) {
    std::ifstream in(files[b]);
    if (!in) throw ConfigError("--input", "cannot read " + files[b].string());
    std::optional<ExperimentConfig> hcfg;
    std::optional<screen::RegistrationBand> band;
    std::vector<double> counts;
    std::uint64_t n_inc = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("# config: ", 0) == 0) hcfg = parse_config(json::parse(line.substr(10)));
      else if (line.rfind("# band: ", 0) == 0) band = band_from_json(json::parse(line.substr(8)));
      else if (line.rfind("# n_incident: ", 0) == 0) n_inc = std::stoull(line.substr(14));
      else if (!line.empty() && line[0] != '#') {
        std::istringstream ss(line);
        std::size_t idx;
        double y, c;
        if (!(ss >> idx >> y >> c)) throw ConfigError(files[b].string(), "malformed histogram row");
        counts.push_back(c);
      }
    }
    if (!hcfg || !band) throw ConfigError(files[b].string(), "missing config or band header");
    const auto& rc = hcfg->require_run();
    if (counts.size() != rc.array.n_pixels) throw ConfigError(files[b].string(), "row count does not match n_pixels");
    double total = 0.0;
    for (double c : counts) total += c;
    BandSummary s;
    if (total > 0.0) s = summarize_band(counts, *band, rc.geometry, rc.array.grid(), cfg.analysis);
    else s.note = "no registered events";
    write_visibility(fs::path(out_dir) / fmt::format("visibility_band{}.tsv", b), s);
    summary += summary_row(b, *band, static_cast<std::uint64_t>(total), n_inc, s);
  }
  open_out(fs::path(out_dir) / "summary.tsv") << summary;
  log << "analyze: " << files.size() << " histogram(s)\n";
  return kExitOk;
}

}  // namespace photocoh::cli
