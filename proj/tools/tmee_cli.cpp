#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tmee/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trimmed MEE online regression experiments"};
  app.require_subcommand(1);

  tmee::CommandOptions options;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t workers = 0;

  const auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", options.config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "base seed, overrides the config");
    sub->add_option("--trials", trials, "Monte-Carlo trials, overrides the config");
    sub->add_option("--workers", workers, "worker threads, 0 = one per core");
  };
  auto* run = app.add_subcommand("run", "learning curves and testing MAE");
  auto* sweep = app.add_subcommand("sweep", "steady state over a (mu, sigma) grid");
  auto* demo = app.add_subcommand("quantile-demo", "quartile tracking and fence flags");
  for (auto* sub : {run, sweep, demo}) add_flags(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tmee::exit_code::config_error;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--out")) options.out = out;
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->count("--trials")) options.trials = trials;
  if (chosen->count("--workers")) options.workers = workers;

  if (chosen == run) return tmee::cmd_run(options, std::cout, std::cerr);
  if (chosen == sweep) return tmee::cmd_sweep(options, std::cout, std::cerr);
  return tmee::cmd_quantile_demo(options, std::cout, std::cerr);
}
