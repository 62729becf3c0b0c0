#include <iostream>

#include <CLI11.hpp>

#include "vldp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Volterra stochastic volatility simulation and large-deviation rates"};
  app.set_version_flag("--version", vldp::kVersion);
  app.require_subcommand(1);

  vldp::CliOptions opts;
  std::uint64_t seed = 0;
  int threads = 1;
  for (const auto& name : vldp::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", opts.config_path, "experiment config file");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out,-o", opts.out_dir, "artifact directory")->capture_default_str();
    sub->add_option("--threads,-j", threads, "worker threads")->check(CLI::PositiveNumber);
    if (name == "terminal-rate") sub->add_option("--z", opts.z, "terminal point, e.g. 1,1");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = app.get_subcommands().front();
  opts.subcommand = chosen->get_name();
  if (chosen->count("--seed")) opts.seed = seed;
  if (chosen->count("--threads")) opts.threads = threads;
  return vldp::run_subcommand(opts, std::cout, std::cerr);
}
