#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mbions/fields.hpp"
#include "mbions/kinetics.hpp"

namespace mbions {

inline constexpr int kDiagnosticsSchemaVersion = 1;

/// One logged step. Quantities that do not apply to a model are NaN and are
/// written as `nan`.
struct DiagnosticsRecord {
  static constexpr double none = std::numeric_limits<double>::quiet_NaN();

  long step = 0;
  double t = 0.0;
  double mass_ion = none;
  double mass_electron = none;
  double kinetic_ion = none;
  double kinetic_electron = none;
  double field_energy = none;
  double total_energy = none;
  double beta = none;
  double beta_invariant = none;
  double entropy_ion = none;
  double entropy_electron = none;
  double relative_entropy = none;
  double arnold_functional = none;
  double dissipation = none;  // accumulated collision entropy change of the electrons
  double cumulative_mass_loss = 0.0;
  double max_speed_bound = 0.0;  // int_0^t |E|_inf ds
  double tail_fraction = none;   // mass fraction outside |v| <= 0.9 v_max
  double max_density = none;
  double density_bound = none;   // |f0|_inf (2 (v_max + int |E|))^d
  double mb_deviation = none;    // electron distance from the Maxwell-Boltzmann relation

  /// Sum of the energy parts, by definition equal to total_energy.
  double energy_parts_sum() const;
};

std::vector<std::string> diagnostics_columns();
void write_diagnostics_header(std::ostream& os);
void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& r);
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records);

/// Shortest round-tripping decimal text for a double; `nan` / `inf` / `-inf`.
std::string format_number(double x);

/// int <f log f> with 0 log 0 = 0, summed spatial cell by spatial cell.
double entropy(const PhaseDistribution& f);

/// H(f|F) = int int [f log(f/F) - f + F]; F must be positive on the grid.
double relative_entropy(const PhaseDistribution& f, const PhaseDistribution& F);

/// epsilon [H(f|F) + (beta lambda^2 / 2) int |grad(phi - Phi)|^2]. The field
/// term carries epsilon too: the continuity equation is eps d<f>/dt = -div<v f>.
double arnold_functional(const PhaseDistribution& f, const SpatialField& phi, const PhaseDistribution& F_ref,
                         const SpatialField& Phi_ref, double epsilon, double beta, double lambda_D = 1.0);

/// Fraction of the mass of f lying outside |v| <= fraction * v_max.
double tail_mass_fraction(const PhaseDistribution& f, double fraction = 0.9);

struct StationaryReference {
  PhaseDistribution F;
  SpatialField Phi;
  double beta = 0.0;
  BetaSolution solution;
  /// |-lambda^2 Lap Phi + <F> - n_I|_inf.
  double residual = 0.0;
};

/// Steady pair (F, Phi) for a frozen ion density: (beta, Phi) from find_beta,
/// F the grid Maxwellian rescaled to mass m0.
StationaryReference stationary_reference(const SpatialField& n_ion, double m0, double E1, double lambda_D = 1.0,
                                         const FieldSolverOptions& options = {});

}  // namespace mbions
