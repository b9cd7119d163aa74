// Command-line front end: one subcommand per run mode, all driven by an INI
// config with a handful of overrides.

#include "cholera/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv)
{
  CLI::App app{"Spatial stochastic SIRB cholera model: simulation and limit checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::string> regime;

  const std::vector<std::pair<const char*, const char*>> modes = {
      {"simulate", "Run exact stochastic replicas and write trajectories"},
      {"pde", "Integrate the lattice reaction-transport system"},
      {"homogeneous", "Integrate the spatially homogeneous ODE"},
      {"converge", "Run a law-of-large-numbers ladder"},
      {"diagnose", "Check martingale residuals and compensators"},
  };
  for (const auto& [name, help] : modes) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--replicas", replicas, "Number of replicas");
    sub->add_option("--workers", workers, "Worker threads for replicas");
    sub->add_option("--out", out, "Output directory");
    if (std::string(name) == "converge") {
      sub->add_option("--mode", regime, "Ladder regime")->check(CLI::IsMember({"theorem1", "theorem2"}));
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    cholera::RunConfig cfg = cholera::parse_config(config_path);
    cfg.mode = cholera::parse_run_mode(app.get_subcommands().front()->get_name());
    if (seed) {
      cfg.seed = *seed;
    }
    if (replicas) {
      cfg.replicas = *replicas;
    }
    if (workers) {
      cfg.workers = *workers;
    }
    if (out) {
      cfg.output = *out;
    }
    if (regime) {
      cfg.regime = cholera::parse_regime(*regime);
    }
    cfg.finalize();
    return cholera::run(cfg, std::cout);
  } catch (const cholera::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
