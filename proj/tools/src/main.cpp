#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "unishrink/cli/app.hpp"

namespace cli = unishrink::cli;

int main(int argc, char** argv) {
  CLI::App app{"Bayesian shrinkage estimation of precision matrices"};
  app.require_subcommand(1);

  cli::FlagOverrides flags;
  std::string config_path, out_path;
  std::uint64_t seed = 0, iters = 0, burnin = 0, thin = 0, chains = 0;

  struct Entry {
    cli::Command command;
    const char* help;
  };
  const Entry entries[] = {
      {cli::Command::Simulate, "Generate a synthetic dataset"},
      {cli::Command::FitPrecision, "Sample the posterior of a precision matrix"},
      {cli::Command::FitRegression, "Sample the posterior of a shrinkage regression"},
      {cli::Command::FitMcar, "Fit a matrix-variate CAR model"},
      {cli::Command::ElicitPrior, "Summarize prior draws of the structured row precision"},
      {cli::Command::Bench, "Run the covariance-model benchmark grid"},
  };
  for (const auto& entry : entries) {
    auto* sub = app.add_subcommand(std::string(cli::command_name(entry.command)), entry.help);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "Base random seed");
    sub->add_option("--iters", iters, "Total sweeps per chain");
    sub->add_option("--burnin", burnin, "Sweeps discarded before keeping draws");
    sub->add_option("--thin", thin, "Keep every thin-th draw");
    sub->add_option("--chains", chains, "Number of independent chains");
    sub->add_option("--out", out_path, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config")) flags.config = config_path;
  if (sub->count("--seed")) flags.seed = seed;
  if (sub->count("--iters")) flags.iters = iters;
  if (sub->count("--burnin")) flags.burnin = burnin;
  if (sub->count("--thin")) flags.thin = thin;
  if (sub->count("--chains")) flags.chains = chains;
  if (sub->count("--out")) flags.out = out_path;

  try {
    const auto config = cli::parse_config(cli::parse_command(sub->get_name()), flags);
    cli::run(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << cli::error_document(e).dump() << '\n';
    return cli::exit_code_for(e);
  }
  return 0;
}
