#include "photocoh/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::cli {

using nlohmann::json;

namespace {

// Reads one JSON object, records what it consumed into `out`, and rejects
// anything left over.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double number(const std::string& k) {
    const json& v = at(k);
    if (!v.is_number()) throw ConfigError(key(k), "expected a number");
    out_[k] = v;
    return v.get<double>();
  }
  double number(const std::string& k, double def) {
    if (!has(k)) {
      out_[k] = def;
      used_.insert(k);
      return def;
    }
    return number(k);
  }
  std::uint64_t count(const std::string& k, std::uint64_t def, std::uint64_t min = 0) {
    if (!has(k)) {
      out_[k] = def;
      used_.insert(k);
      return def;
    }
    const json& v = at(k);
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(key(k), "expected an integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) throw ConfigError(key(k), "must be >= 0");
    const auto n = v.get<std::uint64_t>();
    if (n < min) throw ConfigError(key(k), "must be >= " + std::to_string(min));
    out_[k] = n;
    return n;
  }
  std::uint64_t count(const std::string& k) {
    if (!has(k)) throw ConfigError(key(k), "missing required key");
    return count(k, 0);
  }
  bool flag(const std::string& k, bool def) {
    if (!has(k)) {
      out_[k] = def;
      used_.insert(k);
      return def;
    }
    const json& v = at(k);
    if (!v.is_boolean()) throw ConfigError(key(k), "expected true or false");
    out_[k] = v;
    return v.get<bool>();
  }
  std::string text(const std::string& k, const std::string& def) {
    if (!has(k)) {
      out_[k] = def;
      used_.insert(k);
      return def;
    }
    const json& v = at(k);
    if (!v.is_string()) throw ConfigError(key(k), "expected a string");
    out_[k] = v;
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& k) {
    const json& v = at(k);
    if (!v.is_array()) throw ConfigError(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key(k), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    out_[k] = v;
    return out;
  }
  const json& raw(const std::string& k) { return at(k); }
  void put(const std::string& k, json v) { out_[k] = std::move(v); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  json finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    return out_;
  }

 private:
  const json& at(const std::string& k) {
    if (!has(k)) throw ConfigError(key(k), "missing required key");
    used_.insert(k);
    return j_.at(k);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  json out_ = json::object();
};

double positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive and finite");
  return v;
}

spectral::FilterShape parse_shape(const std::string& s, const std::string& key) {
  if (s == "top_hat") return spectral::FilterShape::kTopHat;
  if (s == "lorentzian") return spectral::FilterShape::kLorentzian;
  if (s == "gaussian") return spectral::FilterShape::kGaussian;
  throw ConfigError(key, "unknown filter shape '" + s + "' (top_hat, lorentzian, gaussian)");
}

spectral::SpectralWeight parse_weight(Section& src, const std::string& path) {
  std::vector<spectral::SpectralWeight::Part> parts;
  if (src.has("lines")) {
    const json& arr = src.raw("lines");
    if (!arr.is_array() || arr.empty()) throw ConfigError(src.key("lines"), "expected a non-empty array");
    json canon = json::array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section line(arr[i], path + ".lines[" + std::to_string(i) + "]");
      const double e = positive(line.number("energy_ev"), line.key("energy_ev"));
      const double w = positive(line.number("weight", 1.0), line.key("weight"));
      parts.emplace_back(spectral::SpectralLine{ev_to_joule(e), w});
      canon.push_back(line.finish());
    }
    src.put("lines", canon);
  }
  if (src.has("continuum")) {
    Section c(src.raw("continuum"), path + ".continuum");
    auto energy = c.numbers("energy_ev");
    auto density = c.numbers("density");
    const double w = positive(c.number("weight", 1.0), c.key("weight"));
    if (energy.size() < 2 || energy.size() != density.size())
      throw ConfigError(c.key("density"), "needs >= 2 points matching energy_ev");
    for (double& e : energy) e = ev_to_joule(e);
    parts.emplace_back(spectral::SpectralTable{energy, density, w});
    src.put("continuum", c.finish());
  }
  if (parts.empty()) throw ConfigError(path, "needs 'lines' and/or 'continuum'");
  try {
    return spectral::SpectralWeight(std::move(parts));
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

spectral::GasConditions parse_gas(Section& g) {
  spectral::GasConditions gas;
  gas.pressure = positive(g.number("pressure_pa"), g.key("pressure_pa"));
  gas.temperature = positive(g.number("temperature_k"), g.key("temperature_k"));
  gas.particle_mass = positive(g.number("particle_mass_kg", kHydrogenMass), g.key("particle_mass_kg"));
  gas.cross_section = positive(g.number("cross_section_m2"), g.key("cross_section_m2"));
  return gas;
}

}  // namespace

const engine::RunConfig& ExperimentConfig::require_run() const {
  if (!run) throw ConfigError("source", "simulation needs source, geometry, detector, mode and run sections");
  return *run;
}

json ExperimentConfig::experiment_echo() const {
  json e = doc;
  if (e.contains("run")) e["run"].erase("workers");
  return e;
}

ExperimentConfig parse_config(const json& j) {
  Section top(j, "");
  ExperimentConfig cfg;
  json canon = json::object();

  const bool physics = top.has("source") || top.has("geometry") || top.has("detector") || top.has("mode") ||
                       top.has("run");
  if (physics) {
    engine::RunConfig rc;
    for (const char* s : {"source", "geometry", "detector", "mode", "run"})
      if (!top.has(s)) throw ConfigError(s, "missing required section");

    // source
    Section src(top.raw("source"), "source");
    rc.source.weight = parse_weight(src, "source");
    if (src.has("gas")) {
      if (src.has("tau_c_s")) throw ConfigError("source.tau_c_s", "give either tau_c_s or gas, not both");
      Section g(src.raw("gas"), "source.gas");
      cfg.gas = parse_gas(g);
      src.put("gas", g.finish());
      rc.source.coherence.tau_ref = spectral::collisional_coherence_time(*cfg.gas);
    } else {
      const json& t = src.raw("tau_c_s");
      if (t.is_string() && t.get<std::string>() == "inf") {
        rc.source.coherence.tau_ref = std::numeric_limits<double>::infinity();
        src.put("tau_c_s", "inf");
      } else {
        rc.source.coherence.tau_ref = positive(src.number("tau_c_s"), "source.tau_c_s");
      }
    }
    rc.source.coherence.exponent = src.number("coherence_exponent", 0.0);
    const double e_ref = src.number("coherence_ref_ev", joule_to_ev(rc.source.weight.mean_energy()));
    rc.source.coherence.energy_ref = ev_to_joule(positive(e_ref, "source.coherence_ref_ev"));
    rc.source.doppler_sigma = src.number("doppler_sigma_rad_s", 0.0);
    if (!(rc.source.doppler_sigma >= 0.0)) throw ConfigError("source.doppler_sigma_rad_s", "must be >= 0");
    canon["source"] = src.finish();

    // geometry
    Section geo(top.raw("geometry"), "geometry");
    const std::string type = geo.text("type", "double_slit");
    std::string unit = "m";
    if (type == "double_slit") {
      optics::DoubleSlit ds;
      ds.separation = positive(geo.number("separation_m"), "geometry.separation_m");
      ds.distance = positive(geo.number("distance_m"), "geometry.distance_m");
      ds.slit_width = geo.number("slit_width_m", 0.0);
      ds.small_angle = geo.flag("small_angle", true);
      rc.geometry = ds;
    } else if (type == "michelson") {
      rc.geometry = optics::Michelson{geo.number("tau_min_s"), geo.number("tau_max_s")};
      unit = "s";
    } else {
      throw ConfigError("geometry.type", "unknown geometry '" + type + "' (double_slit, michelson)");
    }
    try {
      optics::validate(rc.geometry);
    } catch (const DomainError& e) {
      throw ConfigError("geometry", e.what());
    }
    canon["geometry"] = geo.finish();

    // detector
    Section det(top.raw("detector"), "detector");
    rc.array.n_pixels = det.count("n_pixels", 256, 2);
    if (const auto* mi = std::get_if<optics::Michelson>(&rc.geometry)) {
      rc.array.y_min = mi->tau_min;
      rc.array.pitch = (mi->tau_max - mi->tau_min) / static_cast<double>(rc.array.n_pixels);
    } else {
      rc.array.pitch = positive(det.number("pitch_" + unit), "detector.pitch_" + unit);
      rc.array.y_min = det.number("y_min_" + unit, -0.5 * rc.array.pitch * static_cast<double>(rc.array.n_pixels));
    }
    rc.array.sigma_e = ev_to_joule(det.number("sigma_e_ev", 0.0));
    rc.array.quantum_efficiency = det.number("quantum_efficiency", 1.0);
    try {
      rc.array.validate();
    } catch (const DomainError& e) {
      throw ConfigError("detector", e.what());
    }
    canon["detector"] = det.finish();

    // mode
    Section mode(top.raw("mode"), "mode");
    const std::string mtype = mode.text("type", "detections_filter");
    if (mtype == "detections_filter") {
      engine::DetectionsFilterMode df;
      const json& arr = mode.raw("bands");
      if (!arr.is_array() || arr.empty()) throw ConfigError("mode.bands", "expected a non-empty array of bands");
      json bands = json::array();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section b(arr[i], "mode.bands[" + std::to_string(i) + "]");
        screen::RegistrationBand band;
        band.center = ev_to_joule(positive(b.number("center_ev"), b.key("center_ev")));
        if (b.has("half_width_ev") == b.has("delta_nu_hz"))
          throw ConfigError(b.key("half_width_ev"), "give exactly one of half_width_ev or delta_nu_hz");
        if (b.has("half_width_ev"))
          band.half_width = ev_to_joule(positive(b.number("half_width_ev"), b.key("half_width_ev")));
        else
          band.half_width = kPlanck * positive(b.number("delta_nu_hz"), b.key("delta_nu_hz"));
        df.bands.push_back(band);
        bands.push_back(b.finish());
      }
      mode.put("bands", bands);
      rc.mode = df;
    } else if (mtype == "optical_filter") {
      Section f(mode.raw("filter"), "mode.filter");
      spectral::FilterSpec fs;
      fs.center_energy = ev_to_joule(positive(f.number("center_ev"), "mode.filter.center_ev"));
      fs.bandwidth_hz = positive(f.number("bandwidth_hz"), "mode.filter.bandwidth_hz");
      fs.shape = parse_shape(f.text("shape", "top_hat"), "mode.filter.shape");
      mode.put("filter", f.finish());
      rc.mode = engine::OpticalFilterMode{fs};
    } else if (mtype == "photoluminescent") {
      screen::PhotoluminescentScreen ps;
      ps.transition_energy = ev_to_joule(positive(mode.number("transition_ev"), "mode.transition_ev"));
      ps.transition_width = ev_to_joule(positive(mode.number("width_ev"), "mode.width_ev"));
      ps.cooling_scale = mode.number("cooling_scale", 1.0);
      try {
        ps.validate();
      } catch (const DomainError& e) {
        throw ConfigError("mode", e.what());
      }
      rc.mode = engine::PhotoluminescentMode{ps};
    } else {
      throw ConfigError("mode.type", "unknown mode '" + mtype + "'");
    }
    canon["mode"] = mode.finish();

    // run
    Section run(top.raw("run"), "run");
    rc.n_photons = run.count("n_photons");
    if (rc.n_photons < 1) throw ConfigError("run.n_photons", "must be >= 1");
    rc.seed = run.count("seed", 1);
    rc.workers = static_cast<unsigned>(run.count("workers", 1, 1));
    rc.record_events = run.flag("dump_events", false);
    canon["run"] = run.finish();
    try {
      rc.validate();
    } catch (const DomainError& e) {
      throw ConfigError("source", e.what());
    }
    cfg.run = rc;
  }

  if (top.has("analysis")) {
    Section a(top.raw("analysis"), "analysis");
    cfg.analysis.threshold = a.number("threshold", cfg.analysis.threshold);
    if (!(cfg.analysis.threshold > 0.0 && cfg.analysis.threshold < 1.0))
      throw ConfigError("analysis.threshold", "must be in (0, 1)");
    const std::string est = a.text("estimator", "count");
    if (est == "count")
      cfg.analysis.estimator = Estimator::kCount;
    else if (est == "crossing")
      cfg.analysis.estimator = Estimator::kCrossing;
    else
      throw ConfigError("analysis.estimator", "unknown estimator '" + est + "' (count, crossing)");
    canon["analysis"] = a.finish();
  }
  if (top.has("output")) {
    Section o(top.raw("output"), "output");
    cfg.output_dir = o.text("directory", "out");
    canon["output"] = o.finish();
  }
  if (top.has("sweep")) {
    Section s(top.raw("sweep"), "sweep");
    cfg.sweep_pressures = s.numbers("pressures_pa");
    for (double p : cfg.sweep_pressures) positive(p, "sweep.pressures_pa");
    canon["sweep"] = s.finish();
  }
  if (top.has("compare")) {
    Section c(top.raw("compare"), "compare");
    CompareSettings cs;
    cs.bandwidth_hz = positive(c.number("bandwidth_hz"), "compare.bandwidth_hz");
    cs.shape = parse_shape(c.text("shape", "top_hat"), "compare.shape");
    cfg.compare = cs;
    canon["compare"] = c.finish();
  }
  if (top.has("oracle")) {
    Section o(top.raw("oracle"), "oracle");
    cfg.oracle.modes = o.count("modes", 256, 2);
    cfg.oracle.y_points = o.count("y_points", 64, 2);
    if (o.has("window_factors")) {
      cfg.oracle.window_factors = o.numbers("window_factors");
      for (double f : cfg.oracle.window_factors) positive(f, "oracle.window_factors");
    } else {
      o.put("window_factors", cfg.oracle.window_factors);
    }
    cfg.oracle.eps = o.number("eps", 0.1);
    if (!(cfg.oracle.eps > 0.0 && cfg.oracle.eps < 1.0)) throw ConfigError("oracle.eps", "must be in (0, 1)");
    cfg.oracle.detector_shift_per_t0 = o.number("detector_shift_per_t0", 0.0);
    canon["oracle"] = o.finish();
  }
  top.finish();
  cfg.doc = canon;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

spectral::SourceModel source_at_pressure(const ExperimentConfig& cfg, double pressure_pa) {
  if (!cfg.gas) throw ConfigError("source.gas", "a pressure sweep needs source.gas");
  spectral::GasConditions g = *cfg.gas;
  g.pressure = pressure_pa;
  spectral::SourceModel s = cfg.require_run().source;
  s.coherence.tau_ref = spectral::collisional_coherence_time(g);
  return s;
}

}  // namespace photocoh::cli
