#pragma once

#include <string>
#include <vector>

#include "mbions/domain.hpp"
#include "mbions/fields.hpp"
#include "mbions/kinetics.hpp"
#include "mbions/reduced_ions.hpp"
#include "mbions/two_species.hpp"

namespace mbions {

/// Every syntax and semantic problem found in a config text.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class ModelKind { reduced_ions, two_species, equilibrium, solve_pb, limit_sweep, arnold };

const char* to_string(ModelKind m);
ModelKind model_from_string(const std::string& s);

/// Density mean (1 + amplitude cos(2 pi mode x / L)) along the first axis, with a
/// Maxwellian of the given temperature and drift (first velocity component).
/// A nonempty snapshot path replaces the profile.
struct ProfileSpec {
  double mean = 1.0;
  double amplitude = 0.0;
  int mode = 1;
  double temperature = 1.0;
  double drift = 0.0;
  std::string snapshot;

  bool operator==(const ProfileSpec&) const = default;
};

struct InitialSpec {
  ProfileSpec ion;
  /// "maxwellian": electron profile as given; "equilibrium": the
  /// Maxwell-Boltzmann state for the ion density and E1, multiplied by
  /// 1 + amplitude sin(2 pi mode x / L).
  std::string electron_profile = "maxwellian";
  ProfileSpec electron;
  /// Optional ion density for solve_pb / equilibrium: one value per cell.
  std::string density_file;

  bool operator==(const InitialSpec&) const = default;
};

struct OutputSpec {
  std::string directory = "out";
  int every = 1;
  std::vector<double> snapshot_times;

  bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
  DomainSpec domain;

  ModelKind model = ModelKind::reduced_ions;
  double E0 = 0.0;
  double E1 = 0.0;
  double compatibility = 0.9;
  double epsilon = 0.1;
  double eta = 0.0;  // fixed eta when > 0, otherwise eta_rule
  EtaRule eta_rule;
  double sigma = 0.0;
  bool freeze_ions = false;
  bool electron_collisions = true;
  std::vector<double> epsilons{0.2, 0.1, 0.05};

  double t_end = 1.0;
  double cfl = 0.5;
  double dt = 0.0;
  double electron_cfl = 0.5;
  int max_substeps = 100000;
  bool resolve_per_substep = false;
  double max_mass_loss = 1e-6;
  Interpolation interpolation = Interpolation::cubic;
  bool parallel = false;
  FieldSolverOptions field;

  InitialSpec initial;
  OutputSpec output;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the sectioned `key = value` format. Throws ConfigError listing
/// every problem (with line numbers for syntax and unknown keys).
RunConfig parse_config(const std::string& text);

/// Checks cross-field rules; returns the violations (empty when valid).
std::vector<std::string> config_violations(const RunConfig& config);

/// Canonical text: every key in a fixed order, numbers in shortest
/// round-trip form. parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);

ReducedIonsConfig reduced_ions_config(const RunConfig& config);
TwoSpeciesConfig two_species_config(const RunConfig& config);

}  // namespace mbions
