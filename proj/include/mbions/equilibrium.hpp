#pragma once

#include "mbions/fields.hpp"
#include "mbions/kinetics.hpp"

namespace mbions {

struct MaxwellBoltzmannReport {
  /// |f - (beta/2pi)^{d/2} e^{-beta(|v|^2/2 - phi)}|_inf over the grid.
  double distribution_residual = 0.0;
  /// |<f> - e^{beta phi}|_inf over the spatial grid.
  double density_residual = 0.0;
  /// |int <|v|^2/2 f> - m0 d / (2 beta)| with m0 the mass of f.
  double kinetic_residual = 0.0;
};

MaxwellBoltzmannReport verify_maxwell_boltzmann(const PhaseDistribution& f, const SpatialField& phi, double beta);

struct Equilibrium {
  PhaseDistribution f;
  SpatialField phi;
  double beta = 0.0;
  BetaSolution solution;
  MaxwellBoltzmannReport report;
  /// |-lambda^2 Lap phi + e^{beta phi} - n_I|_inf.
  double pde_residual = 0.0;
};

/// (beta, phi) from find_beta and f = maxwellian(beta, phi) on the grid.
Equilibrium self_consistent_equilibrium(const SpatialField& n_ion, double m0, double E1, double lambda_D = 1.0,
                                        const FieldSolverOptions& options = {});

}  // namespace mbions
