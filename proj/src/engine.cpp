#include "photocoh/engine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "photocoh/constants.hpp"
#include "photocoh/error.hpp"

namespace photocoh::engine {

namespace {

constexpr std::uint64_t kChunk = 1u << 16;
constexpr std::size_t kCacheLimit = 4096;
constexpr std::size_t kOpticalCacheLimit = 32;

using Key = std::pair<std::uint64_t, std::uint64_t>;

Key packet_key(const spectral::WavePacket& p) {
  return {std::bit_cast<std::uint64_t>(p.omega0), std::bit_cast<std::uint64_t>(p.tau_c)};
}

std::vector<double> cumulative(std::vector<double> m) {
  double acc = 0.0;
  for (double& v : m) {
    acc += v;
    v = acc;
  }
  for (double& v : m) v /= acc;
  m.back() = 1.0;
  return m;
}

std::size_t draw_pixel(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

struct OpticalEntry {
  std::optional<spectral::FilteredSpectrum> spectrum;  // empty when filtered out
  std::vector<double> cdf;
};

// Worker-local lookups, keyed by the packet's (omega0, tau_c) bit patterns.
class PatternCache {
 public:
  PatternCache(const RunConfig& cfg) : cfg_(cfg) {}

  const std::vector<double>& cdf(const spectral::WavePacket& p) {
    const Key k = packet_key(p);
    auto it = plain_.find(k);
    if (it != plain_.end()) return it->second;
    if (plain_.size() >= kCacheLimit) plain_.clear();
    auto cdf = cumulative(optics::pixel_probabilities(p, cfg_.geometry, cfg_.array.grid()));
    return plain_.emplace(k, std::move(cdf)).first->second;
  }

  const OpticalEntry& optical(const spectral::WavePacket& p, const spectral::FilterSpec& filter) {
    const Key k = packet_key(p);
    auto it = optical_.find(k);
    if (it != optical_.end()) return it->second;
    if (optical_.size() >= kOpticalCacheLimit) optical_.clear();
    OpticalEntry e;
    try {
      e.spectrum.emplace(optics::apply_optical_filter(p, filter));
    } catch (const EmptyResultError&) {
      e.spectrum.reset();
    }
    if (e.spectrum) {
      const auto& s = *e.spectrum;
      e.cdf = cumulative(optics::pixel_probabilities([&s](double tau) { return s.correlation(tau); }, p.omega0,
                                                     cfg_.geometry, cfg_.array.grid()));
    }
    return optical_.emplace(k, std::move(e)).first->second;
  }

 private:
  const RunConfig& cfg_;
  std::map<Key, std::vector<double>> plain_;
  std::map<Key, OpticalEntry> optical_;
};

struct Selection {
  enum Kind { kBands, kOptical, kSubset } kind = kBands;
  std::vector<screen::RegistrationBand> bands;
  spectral::FilterSpec filter;
};

struct ChunkResult {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::vector<screen::DetectionEvent>> events;
  std::uint64_t incident = 0;
};

void process_chunk(const RunConfig& cfg, const Selection& sel, std::uint64_t begin, std::uint64_t end,
                   PatternCache& cache, ChunkResult& out) {
  const std::size_t nb = sel.bands.size();
  const auto grid = cfg.array.grid();
  const double qe = cfg.array.quantum_efficiency;
  std::vector<char> hit(nb, 0);
  for (std::uint64_t i = begin; i < end; ++i) {
    CounterStream packet_stream(cfg.seed, i, Substream::kPacket);
    const spectral::WavePacket packet = spectral::sample_packet(cfg.source, packet_stream);
    if (qe < 1.0) {
      CounterStream eff(cfg.seed, i, Substream::kEfficiency);
      if (!(eff.uniform() < qe)) continue;
    }

    CounterStream energy_stream(cfg.seed, i, Substream::kEnergy);
    screen::EnergySample energy;
    const std::vector<double>* cdf = nullptr;
    if (sel.kind == Selection::kOptical) {
      const OpticalEntry& entry = cache.optical(packet, sel.filter);
      if (!entry.spectrum) continue;
      CounterStream filt(cfg.seed, i, Substream::kFilter);
      if (!(filt.uniform() < entry.spectrum->transmitted_fraction())) continue;
      const double omega = entry.spectrum->sample_omega(energy_stream.uniform());
      energy = screen::measure_energy(omega_to_energy(omega), cfg.array, energy_stream);
      cdf = &entry.cdf;
    } else {
      energy = screen::measure_energy(packet, cfg.array, energy_stream);
    }
    ++out.incident;

    bool any = false;
    for (std::size_t b = 0; b < nb; ++b) {
      bool h = false;
      switch (sel.kind) {
        case Selection::kBands: h = sel.bands[b].contains(energy.e_meas); break;
        case Selection::kSubset: h = sel.bands[b].contains(energy.e_true); break;
        case Selection::kOptical: h = true; break;
      }
      hit[b] = h ? 1 : 0;
      any = any || h;
    }
    if (!any) continue;

    if (cdf == nullptr) cdf = &cache.cdf(packet);
    CounterStream pos(cfg.seed, i, Substream::kPosition);
    const std::size_t pixel = draw_pixel(*cdf, pos.uniform());
    for (std::size_t b = 0; b < nb; ++b) {
      if (!hit[b]) continue;
      ++out.counts[b][pixel];
      if (cfg.record_events) out.events[b].push_back({pixel, grid.center(pixel), energy.e_true, energy.e_meas, i});
    }
  }
}

std::vector<FringePattern> simulate(const RunConfig& cfg, const Selection& sel, std::uint64_t& incident,
                                    std::vector<std::vector<screen::DetectionEvent>>* events) {
  const std::size_t nb = sel.bands.size();
  const std::uint64_t n_chunks = (cfg.n_photons + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks(static_cast<std::size_t>(n_chunks));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    PatternCache cache(cfg);
    try {
      for (;;) {
        const std::uint64_t c = next.fetch_add(1);
        if (c >= n_chunks) break;
        ChunkResult& r = chunks[static_cast<std::size_t>(c)];
        r.counts.assign(nb, std::vector<std::uint64_t>(cfg.array.n_pixels, 0));
        r.events.assign(nb, {});
        const std::uint64_t begin = c * kChunk;
        process_chunk(cfg, sel, begin, std::min(cfg.n_photons, begin + kChunk), cache, r);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n_chunks);
    }
  };

  const auto n_workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, cfg.workers), n_chunks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<FringePattern> patterns(nb);
  incident = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    patterns[b].band = sel.bands[b];
    patterns[b].counts.assign(cfg.array.n_pixels, 0);
  }
  if (events != nullptr) events->assign(nb, {});
  for (auto& r : chunks) {
    incident += r.incident;
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t p = 0; p < cfg.array.n_pixels; ++p) patterns[b].counts[p] += r.counts[b][p];
      if (events != nullptr) (*events)[b].insert((*events)[b].end(), r.events[b].begin(), r.events[b].end());
    }
    r = ChunkResult{};
  }
  for (auto& p : patterns) {
    p.n_incident = incident;
    for (auto c : p.counts) p.n_registered += c;
    p.empty = p.n_registered == 0;
  }
  return patterns;
}

}  // namespace

void RunConfig::validate() const {
  source.validate();
  optics::validate(geometry);
  array.validate();
  if (n_photons < 1) throw DomainError("RunConfig: n_photons must be >= 1");
  if (workers < 1) throw DomainError("RunConfig: workers must be >= 1");
  if (const auto* df = std::get_if<DetectionsFilterMode>(&mode)) {
    if (df->bands.empty()) throw DomainError("RunConfig: detections filter needs at least one band");
    for (const auto& b : df->bands) b.validate();
  } else if (const auto* of = std::get_if<OpticalFilterMode>(&mode)) {
    of->filter.validate();
  } else {
    std::get<PhotoluminescentMode>(mode).screen.validate();
  }
}

double FringePattern::acceptance_fraction() const {
  return n_incident == 0 ? 0.0 : static_cast<double>(n_registered) / static_cast<double>(n_incident);
}

std::vector<screen::RegistrationBand> mode_bands(const RunConfig& config) {
  if (const auto* df = std::get_if<DetectionsFilterMode>(&config.mode)) return df->bands;
  if (const auto* of = std::get_if<OpticalFilterMode>(&config.mode))
    return {{of->filter.center_energy, std::numeric_limits<double>::infinity()}};
  return {std::get<PhotoluminescentMode>(config.mode).screen.band()};
}

RunResult run(const RunConfig& config) {
  config.validate();
  Selection sel;
  sel.bands = mode_bands(config);
  if (const auto* of = std::get_if<OpticalFilterMode>(&config.mode)) {
    sel.kind = Selection::kOptical;
    sel.filter = of->filter;
  }

  RunResult out;
  std::uint64_t incident = 0;
  out.patterns = simulate(config, sel, incident, config.record_events ? &out.events : nullptr);

  auto& meta = out.metadata;
  meta.seed = config.seed;
  meta.n_photons = config.n_photons;
  meta.n_incident = incident;
  if (sel.kind == Selection::kOptical) {
    // The pass fraction of a line source's filtered spectrum.
    spectral::FilteredSpectrum fs(config.source, sel.filter);
    meta.transmitted_fraction = fs.transmitted_fraction();
  }
  for (std::size_t b = 0; b < out.patterns.size(); ++b) {
    const auto& p = out.patterns[b];
    BandReport rep;
    rep.check = screen::check_bandwidth_constraint(p.band, config.source);
    rep.acceptance_fraction = p.acceptance_fraction();
    meta.bands.push_back(rep);
    if (rep.check.status == screen::BandStatus::kWarn && sel.kind != Selection::kOptical)
      meta.warnings.push_back(fmt::format("band {}: detector bandwidth ratio {} exceeds 0.1", b, rep.check.ratio));
    if (p.empty) meta.warnings.push_back(fmt::format("band {}: no registered events", b));
    const double omega = energy_to_omega(p.band.center);
    if (screen::pixels_per_fringe(config.array, config.geometry, omega) < 8.0)
      meta.warnings.push_back(fmt::format("band {}: fewer than 8 pixels per fringe", b));
  }
  return out;
}

FringePattern subset_source_run(const RunConfig& config, const screen::RegistrationBand& band) {
  config.validate();
  band.validate();
  Selection sel;
  sel.kind = Selection::kSubset;
  sel.bands = {band};
  std::uint64_t incident = 0;
  auto patterns = simulate(config, sel, incident, nullptr);
  return patterns.front();
}

}  // namespace photocoh::engine
