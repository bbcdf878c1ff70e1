#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcd/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimum conditional disparity estimation for regression models"};
  app.require_subcommand(0, 1);

  std::string config_path;
  uint64_t seed_override = 0;
  int threads = -1;
  std::string out_dir;
  bool full_scale = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "path to a run config (.ini) or a manifest.json")
        ->required();
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--threads", threads, "worker threads (default: number of cores)");
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_flag("--full-scale", full_scale, "paper-scale run (R = 5000, B = 100)");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit estimators to a csv dataset");
  CLI::App* simulate = app.add_subcommand("simulate", "replication study without bootstrap");
  CLI::App* boot = app.add_subcommand("bootstrap", "replication study with bootstrap inference");
  CLI::App* breakdown = app.add_subcommand("breakdown", "contamination curves over a z grid");
  for (CLI::App* c : {fit, simulate, boot, breakdown}) add_common(c);

  CLI11_PARSE(app, argc, argv);

  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  mcd::RunConfig cfg;
  try {
    cfg = mcd::load_config(config_path);
  } catch (const mcd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == mcd::ErrorCode::Io ? 3 : 2;
  }

  const std::string requested = app.get_subcommands().front()->get_name();
  if (cfg.command != requested) {
    // the CLI subcommand wins; keep the config text for the manifest
    cfg.command = requested;
  }
  if (seed_override != 0) cfg.seed = seed_override;
  if (threads >= 0) cfg.threads = threads;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (full_scale) {
    cfg.replications = 5000;
    if (cfg.command == "bootstrap" || cfg.command == "fit") cfg.bootstrap_B = 100;
  }
  return mcd::run_command(std::move(cfg));
}
