// fracou command-line runner: executes experiment configs and prints
// summaries of finished runs.
//
//   fracou run <config.json> [--seed N] [--out DIR]
//   fracou report <manifest.json>
//   fracou --list-scenarios
//
// Exit codes: 0 success, 2 config/validation error, 3 numeric failure,
// 4 resource cap exceeded.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracou/errors.hpp"
#include "fracou/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stochastic evolution equations driven by fractional Brownian motion"};
  app.require_subcommand(0, 1);

  bool list_scenarios = false;
  app.add_flag("--list-scenarios", list_scenarios, "list available scenarios and exit");

  std::string config_file;
  std::string out_dir = "fracou_out";
  std::int64_t seed_override = -1;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_file, "experiment config (JSON)")->required();
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--out", out_dir, "output directory");

  std::string manifest_file;
  auto* report = app.add_subcommand("report", "summarize a finished run");
  report->add_option("manifest", manifest_file, "manifest.json of a run")->required();

  CLI11_PARSE(app, argc, argv);

  if (list_scenarios) {
    for (const auto& [name, blurb] : fracou::scenario_catalog()) {
      std::printf("%-14s %s\n", name.c_str(), blurb.c_str());
    }
    return 0;
  }

  try {
    if (run->parsed()) {
      fracou::ExperimentConfig cfg = fracou::load_config(config_file);
      if (seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed_override);
        cfg.raw["seed"] = cfg.seed;
      }
      const fracou::RunManifest manifest = fracou::run_experiment(cfg, out_dir);
      std::printf("wrote %s\n", manifest.path.c_str());
      std::fputs(fracou::emit_report(manifest.path).c_str(), stdout);
      return 0;
    }
    if (report->parsed()) {
      std::fputs(fracou::emit_report(manifest_file).c_str(), stdout);
      return 0;
    }
  } catch (const fracou::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const fracou::ResourceError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  }

  std::fputs(app.help().c_str(), stdout);
  return 0;
}
