#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mbions/domain.hpp"

namespace mbions {

/// Raised by the elliptic solvers: Newton non-convergence, exponential
/// overflow, or a failed bracket search for beta.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldSolverOptions {
  double tol_pde = 1e-10;   // infinity-norm residual, scaled by max(1, |n_I|_inf)
  double tol_energy = 1e-10;  // relative to E1
  double tol_mass = 1e-8;   // relative to m0
  int max_newton = 50;
  int max_halvings = 30;
  int max_doublings = 60;
  int max_beta_iterations = 200;
  int gradient_order = 2;  // stencil used for E = -grad phi

  bool operator==(const FieldSolverOptions&) const = default;
};

/// Second-order five/three-point Laplacian with periodic wrap or mirrored
/// ghost cells (homogeneous Neumann). Rows sum to zero.
Eigen::SparseMatrix<double> laplacian(const SpatialGrid& grid);

/// Discrete Dirichlet form sum_faces |grad_h phi|^2 * cell_measure, equal to
/// -<phi, L phi> for the Laplacian above.
double gradient_norm_squared(const SpatialField& phi);

/// (lambda^2 / 2) * gradient_norm_squared(phi).
double field_energy(const SpatialField& phi, double lambda_D);

struct PoissonBoltzmannSolution {
  SpatialField phi;
  int iterations = 0;
  double residual = 0.0;  // infinity norm
};

/// Damped Newton for -lambda^2 Lap phi + exp(beta phi) = n_I. The optional
/// initial guess replaces the default beta^-1 log(max(n_I, floor)).
PoissonBoltzmannSolution solve_poisson_boltzmann(const SpatialField& n_ion, double beta, double lambda_D,
                                                 const FieldSolverOptions& options = {},
                                                 const SpatialField* initial_guess = nullptr);

inline SpatialField solve_phi_given_beta(const SpatialField& n_ion, double beta, double lambda_D,
                                         const FieldSolverOptions& options = {}) {
  return solve_poisson_boltzmann(n_ion, beta, lambda_D, options).phi;
}

/// Infinity norm of -lambda^2 Lap phi + exp(beta phi) - n_I.
double poisson_boltzmann_residual(const SpatialField& n_ion, const SpatialField& phi, double beta,
                                  double lambda_D);

/// E(beta) = m0 d / (2 beta) + (lambda^2/2) int |grad phi^beta|^2 where d is the
/// velocity dimension of the domain.
double energy_of_beta(const SpatialField& n_ion, double m0, double beta, double lambda_D,
                      const FieldSolverOptions& options = {});

/// dE/dbeta through the linearised problem
///   -lambda^2 Lap w + beta e^{beta phi} w = -e^{beta phi} phi,
/// returning -m0 d/(2 beta^2) - lambda^2 int phi Lap w. Always negative for a
/// solved pair; a non-negative result throws.
double d_energy_d_beta(const SpatialField& n_ion, double m0, double beta, const SpatialField& phi,
                       double lambda_D = 1.0);

struct BetaSolution {
  double beta = 0.0;
  SpatialField phi;
  int newton_iters = 0;   // safeguarded Newton steps on beta
  int bisect_iters = 0;   // bisection fallbacks plus bracket doublings
  int elliptic_iters = 0; // total Newton iterations of the inner elliptic solves
  double pde_residual = 0.0;
  double energy_residual = 0.0;  // E(beta) - E1
  double mass_residual = 0.0;    // int e^{beta phi} - m0
  double beta_lower = 0.0;       // m0 d / (2 E1)
  double beta_upper = 0.0;       // accepted upper bracket
};

/// Unique (beta, phi) with -lambda^2 Lap phi + e^{beta phi} = n_I and
/// E(beta) = E1. Bracket starts at m0 d/(2 E1) and doubles; the root is
/// refined by Newton in 1/beta with bisection safeguard.
BetaSolution find_beta(const SpatialField& n_ion, double m0, double E1, double lambda_D,
                       const FieldSolverOptions& options = {},
                       const SpatialField* initial_guess = nullptr);

/// E = -grad_h phi, one column per spatial axis, central differences of
/// order 2 or 4 (walls mirror phi).
using ElectricField = Eigen::MatrixXd;

ElectricField electric_field(const SpatialField& phi, int order = 2);

/// max over cells of |E(x)|.
double max_field_norm(const ElectricField& E);

}  // namespace mbions
