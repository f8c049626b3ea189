#pragma once

#include <iosfwd>
#include <string>

#include "mbions/config.hpp"

namespace mbions {

enum class Command { run, solve_pb, equilibrium, limit_sweep };

const char* to_string(Command c);

struct InitialData {
  DomainPtr domain;
  PhaseDistribution f_plus;
  PhaseDistribution f_minus;  // empty for the reduced model
};

/// Ion density from initial.density_file when given, otherwise the ion
/// profile mean (1 + amplitude cos(2 pi mode x / L)).
SpatialField initial_ion_density(const RunConfig& config, const DomainPtr& domain);

/// Builds the ion (and, for the two-species models, electron) distributions.
/// Electrons are rescaled to the ion mass so the plasma is neutral.
InitialData build_initial_data(const RunConfig& config);

struct DispatchOptions {
  std::string out_dir;  // overrides output.directory when nonempty
  bool verbose = false;
  bool dry_run = false;
};

/// Runs the command and writes diagnostics.csv, snapshots and summary.json
/// under the output directory. Returns the process exit status; errors from
/// the numerical modules propagate as exceptions.
int dispatch(Command command, const RunConfig& config, const DispatchOptions& options, std::ostream& log);

}  // namespace mbions
