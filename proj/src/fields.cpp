#include "mbions/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/SparseCholesky>

namespace mbions {
namespace {

// exp overflows past ~709.
constexpr double kMaxExponent = 700.0;

void add_axis(std::vector<Eigen::Triplet<double>>& t, const SpatialGrid& g, int axis) {
  const double w = 1.0 / (g.h[axis] * g.h[axis]);
  const bool periodic = g.geometry == Geometry::periodic;
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    const int i = g.axis_index(c, axis);
    auto neighbour = [&](int j) -> Eigen::Index {
      if (g.dim == 1) return j;
      return axis == 0 ? g.flat(j, g.axis_index(c, 1)) : g.flat(g.axis_index(c, 0), j);
    };
    for (int step : {-1, 1}) {
      int j = i + step;
      if (j < 0 || j >= g.n) {
        if (!periodic) continue;  // mirrored ghost cancels the diagonal term
        j = (j + g.n) % g.n;
      }
      t.emplace_back(c, neighbour(j), w);
      t.emplace_back(c, c, -w);
    }
  }
}

void check_exponent(const Eigen::VectorXd& phi, double beta) {
  const double m = (beta * phi.array()).maxCoeff();
  if (!std::isfinite(m) || m > kMaxExponent) {
    std::ostringstream os;
    os << "exp(beta*phi) overflow: max beta*phi = " << m << " (reduce the time step)";
    throw SolverError(os.str());
  }
}

double velocity_dim(const SpatialField& f) { return f.domain->spec.velocity_dim; }

}  // namespace

Eigen::SparseMatrix<double> laplacian(const SpatialGrid& grid) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(grid.size()) * 4 * grid.dim);
  for (int axis = 0; axis < grid.dim; ++axis) add_axis(t, grid, axis);
  Eigen::SparseMatrix<double> L(grid.size(), grid.size());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

double gradient_norm_squared(const SpatialField& phi) {
  const SpatialGrid& g = phi.grid();
  const bool periodic = g.geometry == Geometry::periodic;
  double sum = 0.0;
  for (int axis = 0; axis < g.dim; ++axis) {
    const double inv_h = 1.0 / g.h[axis];
    for (Eigen::Index c = 0; c < g.size(); ++c) {
      const int i = g.axis_index(c, axis);
      int j = i + 1;
      if (j == g.n) {
        if (!periodic) continue;
        j = 0;
      }
      Eigen::Index cj = g.dim == 1 ? j : (axis == 0 ? g.flat(j, g.axis_index(c, 1)) : g.flat(g.axis_index(c, 0), j));
      const double d = (phi.values[cj] - phi.values[c]) * inv_h;
      sum += d * d;
    }
  }
  return sum * g.cell_measure;
}

double field_energy(const SpatialField& phi, double lambda_D) {
  return 0.5 * lambda_D * lambda_D * gradient_norm_squared(phi);
}

double poisson_boltzmann_residual(const SpatialField& n_ion, const SpatialField& phi, double beta,
                                  double lambda_D) {
  require_same_grid(n_ion, phi, "poisson_boltzmann_residual");
  const Eigen::SparseMatrix<double> L = laplacian(phi.grid());
  Eigen::VectorXd r = -lambda_D * lambda_D * (L * phi.values);
  r.array() += (beta * phi.values.array()).exp() - n_ion.values.array();
  return r.lpNorm<Eigen::Infinity>();
}

PoissonBoltzmannSolution solve_poisson_boltzmann(const SpatialField& n_ion, double beta, double lambda_D,
                                                 const FieldSolverOptions& options,
                                                 const SpatialField* initial_guess) {
  if (!(beta > 0.0)) throw std::invalid_argument("solve_poisson_boltzmann: beta must be > 0");
  if ((n_ion.values.array() < 0.0).any())
    throw std::invalid_argument("solve_poisson_boltzmann: ion density must be nonnegative");
  const SpatialGrid& g = n_ion.grid();
  const double mass = integrate_spatial(n_ion);
  if (!(mass > 0.0)) throw std::invalid_argument("solve_poisson_boltzmann: ion density has zero mass");

  const Eigen::SparseMatrix<double> A = -lambda_D * lambda_D * laplacian(g);
  const double scale = std::max(1.0, n_ion.values.lpNorm<Eigen::Infinity>());
  const double tol = options.tol_pde * scale;

  Eigen::VectorXd phi;
  if (initial_guess) {
    require_same_grid(n_ion, *initial_guess, "solve_poisson_boltzmann");
    phi = initial_guess->values;
  } else {
    const double floor = 1e-12 * mass / g.total_measure;
    phi = n_ion.values.array().max(floor).log() / beta;
  }

  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    check_exponent(p, beta);
    r = A * p;
    r.array() += (beta * p.array()).exp() - n_ion.values.array();
    return r.lpNorm<Eigen::Infinity>();
  };

  Eigen::VectorXd r, r_trial, phi_trial;
  double norm = residual(phi, r);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> J = A;
  ldlt.analyzePattern(J);

  int it = 0;
  while (norm > tol) {
    if (it == options.max_newton) {
      std::ostringstream os;
      os << "Poisson-Boltzmann Newton did not converge in " << it << " iterations (residual " << norm
         << ", beta " << beta << ")";
      throw SolverError(os.str());
    }
    ++it;
    J = A;
    const Eigen::ArrayXd e = beta * (beta * phi.array()).exp();
    for (Eigen::Index k = 0; k < J.outerSize(); ++k) J.coeffRef(k, k) += e[k];
    ldlt.factorize(J);
    if (ldlt.info() != Eigen::Success) throw SolverError("Poisson-Boltzmann Jacobian factorisation failed");
    const Eigen::VectorXd step = ldlt.solve(-r);

    double t = 1.0;
    double trial_norm = 0.0;
    int halvings = 0;
    for (;;) {
      phi_trial = phi + t * step;
      try {
        trial_norm = residual(phi_trial, r_trial);
      } catch (const SolverError&) {
        trial_norm = std::numeric_limits<double>::infinity();
      }
      if (trial_norm <= norm || halvings == options.max_halvings) break;
      t *= 0.5;
      ++halvings;
    }
    if (!(trial_norm <= norm)) {
      // Round-off floor: no further decrease is possible.
      if (norm <= 1e3 * tol) break;
      std::ostringstream os;
      os << "Poisson-Boltzmann Newton stalled at residual " << norm << " (beta " << beta << ")";
      throw SolverError(os.str());
    }
    phi.swap(phi_trial);
    r.swap(r_trial);
    norm = trial_norm;
  }
  return {SpatialField(n_ion.domain, std::move(phi)), it, norm};
}

double energy_of_beta(const SpatialField& n_ion, double m0, double beta, double lambda_D,
                      const FieldSolverOptions& options) {
  const SpatialField phi = solve_phi_given_beta(n_ion, beta, lambda_D, options);
  return m0 * velocity_dim(n_ion) / (2.0 * beta) + field_energy(phi, lambda_D);
}

double d_energy_d_beta(const SpatialField& n_ion, double m0, double beta, const SpatialField& phi,
                       double lambda_D) {
  require_same_grid(n_ion, phi, "d_energy_d_beta");
  const SpatialGrid& g = phi.grid();
  const Eigen::SparseMatrix<double> L = laplacian(g);
  Eigen::SparseMatrix<double> J = -lambda_D * lambda_D * L;
  const Eigen::ArrayXd e = (beta * phi.values.array()).exp();
  for (Eigen::Index k = 0; k < J.outerSize(); ++k) J.coeffRef(k, k) += beta * e[k];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(J);
  if (ldlt.info() != Eigen::Success) throw SolverError("d_energy_d_beta: linear solve failed");
  const Eigen::VectorXd rhs = -(e * phi.values.array()).matrix();
  const Eigen::VectorXd w = ldlt.solve(rhs);
  const double gradient_term = -lambda_D * lambda_D * phi.values.dot(L * w) * g.cell_measure;
  const double dE = -m0 * velocity_dim(n_ion) / (2.0 * beta * beta) + gradient_term;
  if (!(dE < 0.0)) {
    std::ostringstream os;
    os << "d_energy_d_beta: non-negative derivative " << dE << " (inputs are not a solved pair)";
    throw SolverError(os.str());
  }
  return dE;
}

BetaSolution find_beta(const SpatialField& n_ion, double m0, double E1, double lambda_D,
                       const FieldSolverOptions& options, const SpatialField* initial_guess) {
  if (!(m0 > 0.0)) throw std::invalid_argument("find_beta: m0 must be > 0 (zero ion density)");
  if (!(E1 > 0.0)) {
    std::ostringstream os;
    os << "find_beta: energy budget E1 = " << E1 << " must be > 0";
    throw SolverError(os.str());
  }
  const double mass = integrate_spatial(n_ion);
  if (std::abs(mass - m0) > options.tol_mass * m0) {
    std::ostringstream os;
    os << "find_beta: int n_I = " << mass << " differs from m0 = " << m0;
    throw std::invalid_argument(os.str());
  }
  const double d = velocity_dim(n_ion);

  BetaSolution out;
  SpatialField guess;
  bool have_guess = initial_guess != nullptr;
  if (have_guess) guess = *initial_guess;

  struct Sample {
    double beta;
    double energy;
    PoissonBoltzmannSolution pb;
  };
  auto evaluate = [&](double beta) {
    Sample s{beta, 0.0, solve_poisson_boltzmann(n_ion, beta, lambda_D, options, have_guess ? &guess : nullptr)};
    out.elliptic_iters += s.pb.iterations;
    s.energy = m0 * d / (2.0 * beta) + field_energy(s.pb.phi, lambda_D);
    guess = s.pb.phi;
    have_guess = true;
    return s;
  };
  const double tol = options.tol_energy * E1;

  const double beta_lo = m0 * d / (2.0 * E1);
  out.beta_lower = beta_lo;
  Sample lo = evaluate(beta_lo);
  Sample best = lo;
  if (std::abs(lo.energy - E1) > tol) {
    Sample hi = evaluate(2.0 * beta_lo);
    int doublings = 0;
    while (hi.energy >= E1) {
      if (++doublings > options.max_doublings) {
        std::ostringstream os;
        os << "find_beta: E(beta) stays above E1 = " << E1 << " up to beta = " << hi.beta
           << " (inconsistent energy budget)";
        throw SolverError(os.str());
      }
      lo = hi;
      hi = evaluate(2.0 * hi.beta);
      ++out.bisect_iters;
    }
    out.beta_upper = hi.beta;

    // g(u) = E(1/u) - E1 is increasing in u = 1/beta and exactly linear when
    // the ion density is uniform.
    double u_lo = 1.0 / hi.beta, g_lo = hi.energy - E1;  // g < 0
    double u_hi = 1.0 / lo.beta, g_hi = lo.energy - E1;  // g >= 0
    best = std::abs(g_lo) < std::abs(g_hi) ? hi : lo;
    double u = u_lo - g_lo * (u_hi - u_lo) / (g_hi - g_lo);
    for (int it = 0;; ++it) {
      if (it == options.max_beta_iterations) throw SolverError("find_beta: beta iteration did not converge");
      if (!(u > u_lo && u < u_hi)) {
        u = 0.5 * (u_lo + u_hi);
        ++out.bisect_iters;
      }
      Sample s = evaluate(1.0 / u);
      const double g_u = s.energy - E1;
      if (std::abs(g_u) < std::abs(best.energy - E1)) best = s;
      if (std::abs(g_u) <= tol) break;
      if (g_u < 0.0) {
        u_lo = u;
        g_lo = g_u;
      } else {
        u_hi = u;
        g_hi = g_u;
      }
      if (u_hi - u_lo <= 1e-15 * u_hi) break;  // bracket collapsed to round-off
      const double dEdbeta = d_energy_d_beta(n_ion, m0, s.beta, s.pb.phi, lambda_D);
      const double dgdu = -s.beta * s.beta * dEdbeta;
      u = u - g_u / dgdu;
      ++out.newton_iters;
    }
  } else {
    out.beta_upper = beta_lo;
  }

  out.beta = best.beta;
  out.phi = best.pb.phi;
  out.pde_residual = best.pb.residual;
  out.energy_residual = best.energy - E1;
  out.mass_residual = integrate_spatial(n_ion.grid(), (best.beta * out.phi.values.array()).exp().matrix()) - m0;
  if (std::abs(out.energy_residual) > 1e3 * tol) {
    std::ostringstream os;
    os << "find_beta: energy residual " << out.energy_residual << " above tolerance";
    throw SolverError(os.str());
  }
  if (std::abs(out.mass_residual) > options.tol_mass * m0) {
    std::ostringstream os;
    os << "find_beta: mass identity violated, int e^{beta phi} - m0 = " << out.mass_residual;
    throw SolverError(os.str());
  }
  return out;
}

ElectricField electric_field(const SpatialField& phi, int order) {
  if (order != 2 && order != 4) throw std::invalid_argument("electric_field: order must be 2 or 4");
  const SpatialGrid& g = phi.grid();
  const bool periodic = g.geometry == Geometry::periodic;
  ElectricField E(g.size(), g.dim);
  for (int axis = 0; axis < g.dim; ++axis) {
    const double inv_h = 1.0 / g.h[axis];
    for (Eigen::Index c = 0; c < g.size(); ++c) {
      const int i = g.axis_index(c, axis);
      // Neumann closure mirrors across the wall: ghost -1 is cell 0, -2 is cell 1.
      auto at = [&](int j) {
        if (j < 0) j = periodic ? j + g.n : -1 - j;
        if (j >= g.n) j = periodic ? j - g.n : 2 * g.n - 1 - j;
        Eigen::Index cj = g.dim == 1 ? j : (axis == 0 ? g.flat(j, g.axis_index(c, 1)) : g.flat(g.axis_index(c, 0), j));
        return phi.values[cj];
      };
      const double d1 = at(i + 1) - at(i - 1);
      E(c, axis) = order == 2 ? -0.5 * d1 * inv_h : -(8.0 * d1 - (at(i + 2) - at(i - 2))) * inv_h / 12.0;
    }
  }
  return E;
}

double max_field_norm(const ElectricField& E) {
  if (E.size() == 0) return 0.0;
  return E.rowwise().norm().maxCoeff();
}

}  // namespace mbions
