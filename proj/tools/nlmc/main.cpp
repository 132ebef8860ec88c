#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "nlmc/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Nonlinear Markov chain particle experiments"};
  cli.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  const char* summaries[] = {
      "E W1(eta^N_n, eta_n) against N with the bound curve",
      "q-marginal distance W1(eta^{N,q}_n, eta_n^{(x)q})",
      "moment recursion against particle trajectories",
      "Dirac-pair contraction estimate against the tau_1 bound",
      "particle filter against the grid reference",
      "tensor vs distinct-tuple measures on exchangeable samples",
      "bound curves and the balancing exponent kappa",
  };
  const auto names = nlmc::app::command_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = cli.add_subcommand(names[i], summaries[i]);
    sub->add_option("--config", config, "TOML config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return nlmc::app::kExitConfig;
  }

  const CLI::App* chosen = cli.get_subcommands().front();
  nlmc::app::Overrides overrides;
  if (chosen->count("--seed") > 0) overrides.seed = seed;
  if (chosen->count("--threads") > 0) overrides.threads = threads;
  return nlmc::app::run_command(chosen->get_name(), config, overrides, out_dir, std::cout, std::cerr);
}
