#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbions/diagnostics.hpp"
#include "mbions/fields.hpp"
#include "mbions/kinetics.hpp"

namespace mbions {

/// The charge balance needed by the periodic/Neumann Poisson problem fails.
class ChargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Electron subcycling would need more than max_substeps per ion step.
class SubstepLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// eta(eps) = coefficient * eps^exponent. Requires coefficient > 0 and
/// 0 <= exponent < 1, so that eta/eps -> infinity while eta stays bounded.
struct EtaRule {
  double coefficient = 1.0;
  double exponent = 0.5;

  double operator()(double epsilon) const;
  void validate() const;
  bool operator==(const EtaRule&) const = default;
};

/// Zero-mean solution of -lambda^2 Lap phi = <f+> - <f->. The masses must
/// agree to tol_mass (relative), the residual is checked against tol_pde.
SpatialField solve_poisson_linear(const PhaseDistribution& f_plus, const PhaseDistribution& f_minus,
                                  double lambda_D, const FieldSolverOptions& options = {});

/// Same problem for a given net charge density (its mean is removed).
SpatialField solve_poisson_linear(const SpatialField& charge, double lambda_D, const FieldSolverOptions& options = {});

struct TwoSpeciesConfig {
  double epsilon = 0.1;
  /// Used when > 0, otherwise eta_rule(epsilon).
  double eta = 0.0;
  EtaRule eta_rule;
  /// Ion BGK rate; 0 disables ion collisions.
  double sigma = 0.0;
  double cfl = 0.5;
  /// Fixed ion step when > 0, otherwise cfl * min(h_x / v_max, h_v / |E|_inf).
  double dt = 0.0;
  /// Electron substep: electron_cfl * min(h_x / v_max, h_v / |E|_inf) in fast time.
  double electron_cfl = 0.5;
  int max_substeps = 100000;
  bool freeze_ions = false;
  /// false switches the electron BGK operator off (collisionless electrons).
  bool electron_collisions = true;
  bool resolve_per_substep = false;
  double max_mass_loss = 1e-6;
  FieldSolverOptions field;
  TransportOptions transport;
  BgkOptions bgk;

  void validate() const;
  double effective_eta() const;
};

struct TwoSpeciesState {
  double t = 0.0;
  long step = 0;
  PhaseDistribution f_minus;
  PhaseDistribution f_plus;
  SpatialField phi;
  double epsilon = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
  double m0 = 0.0;           // ion mass
  double m0_electron = 0.0;  // electron mass
  double E0 = 0.0;
  double dissipation = 0.0;  // accumulated electron entropy change over collision substeps
  long collision_substeps = 0;
  long entropy_increases = 0;         // collision substeps where the electron entropy went up
  double max_entropy_increase = 0.0;  // largest such increase (0 when none)
  double cumulative_mass_loss = 0.0;
  double field_time_integral = 0.0;
  int last_substeps = 0;
  BgkStats bgk_stats;
  /// Optional stationary pair for the relative entropy / Arnold columns.
  std::shared_ptr<const StationaryReference> reference;
};

TwoSpeciesState init_two_species(const TwoSpeciesConfig& config, PhaseDistribution f_plus, PhaseDistribution f_minus);

double total_energy(const TwoSpeciesState& state);

/// |<f-> - e^{bh ph}|_{L1} / m0 with bh = m0 d / (2 K-) and ph the potential
/// shifted so that int e^{bh ph} = m0.
double mb_deviation(const PhaseDistribution& f_minus, const SpatialField& phi);
double mb_deviation(const TwoSpeciesState& state);

DiagnosticsRecord diagnose(const TwoSpeciesState& state);

double stable_time_step(const TwoSpeciesState& state, const TwoSpeciesConfig& config);

/// One ion step: ions x(dt/2), Poisson, ions v(dt), electron subcycles,
/// ions x(dt/2), optional ion BGK, Poisson.
TwoSpeciesState two_species_step(const TwoSpeciesState& state, double dt, const TwoSpeciesConfig& config);

struct TwoSpeciesRun {
  TwoSpeciesState final_state;
  std::vector<DiagnosticsRecord> records;
};

/// Steps to t_end, logging every `output_every` steps and the final state.
TwoSpeciesRun run_two_species(const TwoSpeciesConfig& config, TwoSpeciesState state, double t_end,
                              int output_every = 1);

struct LimitRow {
  double epsilon = 0.0;
  double eta = 0.0;
  double deviation = DiagnosticsRecord::none;
  double final_entropy = DiagnosticsRecord::none;
  long collision_substeps = 0;
  long entropy_increases = 0;
  std::vector<DiagnosticsRecord> records;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// For each epsilon, runs from the same initial data to t_end with
/// eta = rule(epsilon). A failing entry keeps its partial records.
std::vector<LimitRow> limit_experiment(const TwoSpeciesConfig& base, const PhaseDistribution& f_plus0,
                                       const PhaseDistribution& f_minus0, double t_end,
                                       const std::vector<double>& epsilons, const EtaRule& rule,
                                       int output_every = 1, bool parallel = false);

/// Frozen-ion electron run measured against the stationary pair with the
/// same ion density, mass and electron energy.
struct ArnoldRun {
  StationaryReference reference;
  std::vector<DiagnosticsRecord> records;
  TwoSpeciesState final_state;
};

ArnoldRun arnold_experiment(const TwoSpeciesConfig& config, const PhaseDistribution& f_plus,
                            const PhaseDistribution& f_minus0, double t_end, int output_every = 1);

}  // namespace mbions
