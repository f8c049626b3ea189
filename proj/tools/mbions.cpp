// Command-line driver: mbions <command> --config PATH [--out DIR] [--verbose] [--dry-run]
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mbions/cli.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic ions with Maxwell-Boltzmann electrons, and the two-species reference solver"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    mbions::DispatchOptions options;
  };
  Args args;
  const std::pair<const char*, mbions::Command> commands[] = {
      {"run", mbions::Command::run},
      {"solve-pb", mbions::Command::solve_pb},
      {"equilibrium", mbions::Command::equilibrium},
      {"limit-sweep", mbions::Command::limit_sweep},
  };
  const char* help[] = {"time-step the reduced_ions, two_species or arnold model",
                        "solve the Poisson-Boltzmann problem with the energy constraint",
                        "build and verify the stationary Maxwell-Boltzmann state",
                        "run the epsilon sweep towards the Maxwell-Boltzmann limit"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", args.config, "config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.options.out_dir, "output directory (overrides output.directory)");
    sub->add_flag("--verbose", args.options.verbose, "progress on stderr");
    sub->add_flag("--dry-run", args.options.dry_run, "validate the config and exit");
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  mbions::Command command = mbions::Command::run;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) command = commands[i].second;

  mbions::RunConfig config;
  try {
    config = mbions::parse_config(slurp(args.config));
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  try {
    return mbions::dispatch(command, config, args.options, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
