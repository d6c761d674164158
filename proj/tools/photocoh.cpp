#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "photocoh/commands.hpp"
#include "photocoh/config.hpp"
#include "photocoh/error.hpp"

using namespace photocoh;

int main(int argc, char** argv) {
  CLI::App app{"photocoh: photon temporal coherence by energy-resolved detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;
  std::vector<double> pressures;
  std::vector<std::string> inputs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment file (JSON)")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--workers", workers, "override run.workers");
    sub->add_option("--out", out_dir, "output directory (default: output.directory)");
  };
  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo and analyze every band");
  auto* cmp = app.add_subcommand("compare-filters", "optical filter vs detections filter at one bandwidth");
  auto* swp = app.add_subcommand("sweep", "pressure sweep at constant temperature");
  auto* orc = app.add_subcommand("oracle", "exact single-photon equivalence tables");
  auto* ana = app.add_subcommand("analyze", "re-analyze histogram files");
  for (auto* s : {sim, cmp, swp, orc, ana}) common(s);
  swp->add_option("--pressures", pressures, "pressures in Pa (comma separated)")->delimiter(',');
  ana->add_option("--input", inputs, "histogram files (default: all in the output directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    cli::ExperimentConfig cfg = cli::load_config(config_path);
    cli::apply_overrides(cfg, seed, workers);
    const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
    if (sim->parsed()) return cli::simulate(cfg, out, std::cerr);
    if (cmp->parsed()) return cli::compare_filters(cfg, out, std::cout);
    if (swp->parsed()) return cli::sweep(cfg, pressures, out, std::cout);
    if (orc->parsed()) return cli::oracle(cfg, out, std::cout);
    return cli::analyze(cfg, inputs, out, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const EmptyResultError& e) {
    std::cerr << "empty result: " << e.what() << "\n";
    return cli::kExitEmpty;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return cli::kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return cli::kExitInvariant;
  }
}
