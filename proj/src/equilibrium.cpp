#include "mbions/equilibrium.hpp"

namespace mbions {

MaxwellBoltzmannReport verify_maxwell_boltzmann(const PhaseDistribution& f, const SpatialField& phi, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("verify_maxwell_boltzmann: beta must be > 0");
  if (phi.size() != f.values.rows())
    throw std::invalid_argument("verify_maxwell_boltzmann: phi and f live on different spatial grids");
  const Domain& dom = *f.domain;
  const PhaseDistribution M = maxwellian(beta, phi, f.species);
  MaxwellBoltzmannReport r;
  r.distribution_residual = (f.values - M.values).lpNorm<Eigen::Infinity>();
  const Eigen::ArrayXd boltzmann = (beta * phi.values.array()).exp();
  r.density_residual = (density(f).values.array() - boltzmann).abs().maxCoeff();
  r.kinetic_residual = std::abs(total_kinetic_energy(f) - total_mass(f) * dom.v.dim / (2.0 * beta));
  return r;
}

Equilibrium self_consistent_equilibrium(const SpatialField& n_ion, double m0, double E1, double lambda_D,
                                        const FieldSolverOptions& options) {
  Equilibrium eq;
  eq.solution = find_beta(n_ion, m0, E1, lambda_D, options);
  eq.beta = eq.solution.beta;
  eq.phi = eq.solution.phi;
  eq.f = maxwellian(eq.beta, eq.phi, Species::electron);
  eq.report = verify_maxwell_boltzmann(eq.f, eq.phi, eq.beta);
  eq.pde_residual = poisson_boltzmann_residual(n_ion, eq.phi, eq.beta, lambda_D);
  return eq;
}

}  // namespace mbions
