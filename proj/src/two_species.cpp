#include "mbions/two_species.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include <Eigen/SparseLU>

#include "mbions/reduced_ions.hpp"

namespace mbions {
namespace {

void check_pair(const PhaseDistribution& a, const PhaseDistribution& b) {
  if (!a.domain || !b.domain) throw std::invalid_argument("two_species: distribution without a domain");
  if (a.domain != b.domain && !(a.domain->spec == b.domain->spec))
    throw std::invalid_argument("two_species: species live on different domains");
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw std::invalid_argument("two_species: species arrays have different shapes");
}

double electron_substep_limit(const Domain& dom, const ElectricField& E, double cfl) {
  double h_x = dom.x.h[0];
  if (dom.x.dim == 2) h_x = std::min(h_x, dom.x.h[1]);
  double limit = h_x / dom.v.v_max;
  const double e_max = max_field_norm(E);
  if (e_max > 0.0) limit = std::min(limit, dom.v.h / e_max);
  return cfl * limit;
}

void charge_loss(TwoSpeciesState& s, const SupportMonitor& monitor, const TwoSpeciesConfig& config) {
  s.cumulative_mass_loss += monitor.lost_mass;
  if (s.cumulative_mass_loss > config.max_mass_loss * std::min(s.m0, s.m0_electron)) {
    std::ostringstream os;
    os << "velocity cutoff lost " << s.cumulative_mass_loss << " of mass (budget " << config.max_mass_loss
       << " m0); increase v_max";
    throw SupportError(os.str());
  }
}

}  // namespace

double EtaRule::operator()(double epsilon) const { return coefficient * std::pow(epsilon, exponent); }

void EtaRule::validate() const {
  std::vector<std::string> problems;
  if (!(coefficient > 0.0)) problems.push_back("eta coefficient must be > 0");
  if (!(exponent >= 0.0))
    problems.push_back("eta exponent must be >= 0 so that eta stays bounded as epsilon -> 0");
  if (!(exponent < 1.0))
    problems.push_back("eta exponent must be < 1 so that eta/epsilon -> infinity (collisional scaling)");
  if (!problems.empty()) {
    std::string msg = problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ValidationError(msg);
  }
}

void TwoSpeciesConfig::validate() const {
  std::vector<std::string> problems;
  if (!(epsilon > 0.0 && epsilon <= 1.0)) problems.push_back("epsilon must lie in (0, 1]");
  if (eta < 0.0) problems.push_back("eta must be >= 0 (0 selects the eta rule)");
  if (eta == 0.0) {
    try {
      eta_rule.validate();
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }
  if (sigma < 0.0) problems.push_back("sigma must be >= 0");
  if (!(cfl > 0.0)) problems.push_back("cfl must be > 0");
  if (dt < 0.0) problems.push_back("dt must be >= 0");
  if (!(electron_cfl > 0.0)) problems.push_back("electron_cfl must be > 0");
  if (max_substeps < 1) problems.push_back("max_substeps must be >= 1");
  if (!(max_mass_loss >= 0.0)) problems.push_back("max_mass_loss must be >= 0");
  if (!problems.empty()) {
    std::string msg = problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ValidationError(msg);
  }
}

double TwoSpeciesConfig::effective_eta() const { return eta > 0.0 ? eta : eta_rule(epsilon); }

SpatialField solve_poisson_linear(const SpatialField& charge, double lambda_D, const FieldSolverOptions& options) {
  const SpatialGrid& g = charge.grid();
  const Eigen::Index n = g.size();
  const double mean = integrate_spatial(charge) / g.total_measure;
  const Eigen::VectorXd rhs = charge.values.array() - mean;

  // Bordered system [-lambda^2 L, 1; 1^T, 0] fixes the zero-mean gauge.
  const Eigen::SparseMatrix<double> L = laplacian(g);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(L.nonZeros() + 2 * n);
  for (int k = 0; k < L.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), -lambda_D * lambda_D * it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    trips.emplace_back(i, n, 1.0);
    trips.emplace_back(n, i, 1.0);
  }
  Eigen::SparseMatrix<double> A(n + 1, n + 1);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("solve_poisson_linear: factorisation failed");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.head(n) = rhs;
  const Eigen::VectorXd sol = lu.solve(b);

  SpatialField phi(charge.domain, sol.head(n));
  phi.values.array() -= phi.values.mean();
  const double residual = (-lambda_D * lambda_D * (L * phi.values) - rhs).lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (!(residual <= options.tol_pde * scale * 1e3)) {
    std::ostringstream os;
    os << "solve_poisson_linear: residual " << residual << " above tolerance " << options.tol_pde * scale;
    throw SolverError(os.str());
  }
  return phi;
}

SpatialField solve_poisson_linear(const PhaseDistribution& f_plus, const PhaseDistribution& f_minus,
                                  double lambda_D, const FieldSolverOptions& options) {
  check_pair(f_plus, f_minus);
  const SpatialField n_plus = density(f_plus);
  const SpatialField n_minus = density(f_minus);
  const double m_plus = integrate_spatial(n_plus);
  const double m_minus = integrate_spatial(n_minus);
  if (std::abs(m_plus - m_minus) > options.tol_mass * std::max(std::abs(m_plus), std::abs(m_minus))) {
    std::ostringstream os;
    os << "solve_poisson_linear: total charge " << m_plus - m_minus << " (ion mass " << m_plus
       << ", electron mass " << m_minus << ") violates neutrality; the periodic/Neumann problem has no solution";
    throw ChargeError(os.str());
  }
  return solve_poisson_linear(SpatialField(n_plus.domain, n_plus.values - n_minus.values), lambda_D, options);
}

TwoSpeciesState init_two_species(const TwoSpeciesConfig& config, PhaseDistribution f_plus,
                                  PhaseDistribution f_minus) {
  config.validate();
  check_pair(f_plus, f_minus);
  if ((f_plus.values.array() < 0.0).any() || (f_minus.values.array() < 0.0).any())
    throw std::invalid_argument("init_two_species: distributions must be nonnegative");
  f_plus.species = Species::ion;
  f_minus.species = Species::electron;
  f_minus.domain = f_plus.domain;

  TwoSpeciesState s;
  s.epsilon = config.epsilon;
  s.eta = config.effective_eta();
  s.sigma = config.sigma;
  s.m0 = total_mass(f_plus);
  s.m0_electron = total_mass(f_minus);
  if (!(s.m0 > 0.0) || !(s.m0_electron > 0.0)) throw std::invalid_argument("init_two_species: zero mass");
  s.phi = solve_poisson_linear(f_plus, f_minus, f_plus.domain->spec.lambda_D, config.field);
  s.f_plus = std::move(f_plus);
  s.f_minus = std::move(f_minus);
  s.E0 = total_energy(s);
  return s;
}

double total_energy(const TwoSpeciesState& s) {
  return total_kinetic_energy(s.f_minus) + total_kinetic_energy(s.f_plus) +
         field_energy(s.phi, s.f_plus.domain->spec.lambda_D);
}

double mb_deviation(const PhaseDistribution& f_minus, const SpatialField& phi) {
  const Domain& dom = *f_minus.domain;
  const double m0 = total_mass(f_minus);
  const double kinetic = total_kinetic_energy(f_minus);
  if (!(kinetic > 0.0)) throw std::invalid_argument("mb_deviation: electron kinetic energy must be > 0");
  const double beta_hat = m0 * dom.v.dim / (2.0 * kinetic);
  // Shift by the maximum first so the exponentials cannot overflow.
  const Eigen::ArrayXd bp = beta_hat * (phi.values.array() - phi.values.maxCoeff());
  Eigen::ArrayXd boltzmann = bp.exp();
  boltzmann *= m0 / integrate_spatial(dom.x, boltzmann.matrix());
  const Eigen::ArrayXd diff = (density(f_minus).values.array() - boltzmann).abs();
  return integrate_spatial(dom.x, diff.matrix()) / m0;
}

double mb_deviation(const TwoSpeciesState& s) { return mb_deviation(s.f_minus, s.phi); }

DiagnosticsRecord diagnose(const TwoSpeciesState& s) {
  const Domain& dom = *s.f_plus.domain;
  DiagnosticsRecord r;
  r.step = s.step;
  r.t = s.t;
  r.mass_ion = total_mass(s.f_plus);
  r.mass_electron = total_mass(s.f_minus);
  r.kinetic_ion = total_kinetic_energy(s.f_plus);
  r.kinetic_electron = total_kinetic_energy(s.f_minus);
  r.field_energy = field_energy(s.phi, dom.spec.lambda_D);
  r.total_energy = r.energy_parts_sum();
  r.entropy_ion = entropy(s.f_plus);
  r.entropy_electron = entropy(s.f_minus);
  r.dissipation = s.dissipation;
  r.cumulative_mass_loss = s.cumulative_mass_loss;
  r.max_speed_bound = s.field_time_integral;
  r.tail_fraction = std::max(tail_mass_fraction(s.f_plus), tail_mass_fraction(s.f_minus));
  r.max_density = density(s.f_plus).values.maxCoeff();
  if (r.kinetic_electron > 0.0) r.mb_deviation = mb_deviation(s);
  if (s.reference) {
    r.beta = s.reference->beta;
    r.relative_entropy = relative_entropy(s.f_minus, s.reference->F);
    r.arnold_functional = arnold_functional(s.f_minus, s.phi, s.reference->F, s.reference->Phi, s.epsilon,
                                            s.reference->beta, dom.spec.lambda_D);
  }
  return r;
}

double stable_time_step(const TwoSpeciesState& s, const TwoSpeciesConfig& config) {
  if (config.dt > 0.0) return config.dt;
  const Domain& dom = *s.f_plus.domain;
  double h_x = dom.x.h[0];
  if (dom.x.dim == 2) h_x = std::min(h_x, dom.x.h[1]);
  double limit = h_x / dom.v.v_max;
  const double e_max = max_field_norm(electric_field(s.phi, config.field.gradient_order));
  if (e_max > 0.0) limit = std::min(limit, dom.v.h / e_max);
  return config.cfl * limit;
}

TwoSpeciesState two_species_step(const TwoSpeciesState& state, double dt, const TwoSpeciesConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("two_species_step: dt must be > 0");
  TwoSpeciesState s = state;
  const Domain& dom = *s.f_plus.domain;
  const double lambda = dom.spec.lambda_D;
  const int order = config.field.gradient_order;
  const bool move = !config.freeze_ions;
  SupportMonitor monitor;

  if (move) s.f_plus = advect_x(s.f_plus, 0.5 * dt, config.transport);
  SpatialField phi = solve_poisson_linear(s.f_plus, s.f_minus, lambda, config.field);
  ElectricField E = electric_field(phi, order);
  if (move) s.f_plus = advect_v(s.f_plus, E, +1, dt, config.transport, &monitor);
  s.field_time_integral += dt * max_field_norm(E);

  // Electrons in fast time tau = t / epsilon over the ion step.
  const double tau_total = dt / s.epsilon;
  const double tau_cfl = electron_substep_limit(dom, E, config.electron_cfl);
  const double wanted = std::ceil(tau_total / tau_cfl - 1e-12);
  if (wanted > config.max_substeps) {
    std::ostringstream os;
    os << "electron subcycling needs " << wanted << " substeps (max_substeps = " << config.max_substeps
       << "); epsilon = " << s.epsilon << " is too small for dt = " << dt;
    throw SubstepLimitError(os.str());
  }
  const int n_sub = std::max(1, static_cast<int>(wanted));
  const double tau = tau_total / n_sub;
  const double rate = config.electron_collisions ? s.eta : 0.0;  // eta/eps in slow time is eta in fast time
  for (int k = 0; k < n_sub; ++k) {
    s.f_minus = advect_x(s.f_minus, 0.5 * tau, config.transport);
    if (config.resolve_per_substep) {
      phi = solve_poisson_linear(s.f_plus, s.f_minus, lambda, config.field);
      E = electric_field(phi, order);
    }
    s.f_minus = advect_v(s.f_minus, E, -1, tau, config.transport, &monitor);
    s.f_minus = advect_x(s.f_minus, 0.5 * tau, config.transport);
    if (rate > 0.0) {
      const double before = entropy(s.f_minus);
      s.f_minus = bgk_relax(s.f_minus, rate, tau, config.bgk, &s.bgk_stats);
      const double change = entropy(s.f_minus) - before;
      s.dissipation += change;
      ++s.collision_substeps;
      if (change > 0.0) {
        ++s.entropy_increases;
        s.max_entropy_increase = std::max(s.max_entropy_increase, change);
      }
    }
  }
  s.last_substeps = n_sub;

  if (move) s.f_plus = advect_x(s.f_plus, 0.5 * dt, config.transport);
  if (move && s.sigma > 0.0) s.f_plus = bgk_relax(s.f_plus, s.sigma, dt, config.bgk);
  charge_loss(s, monitor, config);

  s.phi = solve_poisson_linear(s.f_plus, s.f_minus, lambda, config.field);
  s.t += dt;
  ++s.step;
  return s;
}

TwoSpeciesRun run_two_species(const TwoSpeciesConfig& config, TwoSpeciesState state, double t_end,
                              int output_every) {
  TwoSpeciesRun out;
  out.records.push_back(diagnose(state));
  const double eps_t = 1e-12 * std::max(1.0, t_end);
  const int every = std::max(1, output_every);
  bool last_recorded = true;
  out.final_state = std::move(state);
  TwoSpeciesState& s = out.final_state;
  while (s.t < t_end - eps_t) {
    double dt = stable_time_step(s, config);
    if (s.t + dt > t_end - eps_t) dt = t_end - s.t;
    try {
      s = two_species_step(s, dt, config);
    } catch (const std::exception& e) {
      throw StepError(s.t, e.what());
    }
    last_recorded = false;
    if (s.step % every == 0) {
      out.records.push_back(diagnose(s));
      last_recorded = true;
    }
  }
  if (!last_recorded) out.records.push_back(diagnose(s));
  return out;
}

std::vector<LimitRow> limit_experiment(const TwoSpeciesConfig& base, const PhaseDistribution& f_plus0,
                                       const PhaseDistribution& f_minus0, double t_end,
                                       const std::vector<double>& epsilons, const EtaRule& rule,
                                       int output_every, bool parallel) {
  rule.validate();
  for (double eps : epsilons)
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("limit_experiment: every epsilon must lie in (0, 1)");

  auto one = [&](double eps) {
    LimitRow row;
    row.epsilon = eps;
    row.eta = rule(eps);
    TwoSpeciesConfig config = base;
    config.epsilon = eps;
    config.eta = row.eta;
    TwoSpeciesState s;
    try {
      s = init_two_species(config, f_plus0, f_minus0);
      row.records.push_back(diagnose(s));
      const double eps_t = 1e-12 * std::max(1.0, t_end);
      const int every = std::max(1, output_every);
      while (s.t < t_end - eps_t) {
        double dt = stable_time_step(s, config);
        if (s.t + dt > t_end - eps_t) dt = t_end - s.t;
        try {
          s = two_species_step(s, dt, config);
        } catch (const std::exception& e) {
          throw StepError(s.t, e.what());
        }
        if (s.step % every == 0 || s.t >= t_end - eps_t) row.records.push_back(diagnose(s));
        row.collision_substeps = s.collision_substeps;
        row.entropy_increases = s.entropy_increases;
      }
      row.deviation = row.records.back().mb_deviation;
      row.final_entropy = row.records.back().entropy_electron;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<LimitRow> rows;
  if (parallel) {
    std::vector<std::future<LimitRow>> jobs;
    for (double eps : epsilons) jobs.push_back(std::async(std::launch::async, one, eps));
    for (auto& j : jobs) rows.push_back(j.get());
  } else {
    for (double eps : epsilons) rows.push_back(one(eps));
  }
  return rows;
}

ArnoldRun arnold_experiment(const TwoSpeciesConfig& config, const PhaseDistribution& f_plus,
                            const PhaseDistribution& f_minus0, double t_end, int output_every) {
  TwoSpeciesConfig frozen = config;
  frozen.freeze_ions = true;
  TwoSpeciesState s = init_two_species(frozen, f_plus, f_minus0);
  const double E1 = total_kinetic_energy(s.f_minus) + field_energy(s.phi, s.f_plus.domain->spec.lambda_D);
  auto ref = std::make_shared<StationaryReference>(
      stationary_reference(density(s.f_plus), s.m0_electron, E1, s.f_plus.domain->spec.lambda_D, config.field));
  s.reference = ref;
  TwoSpeciesRun run = run_two_species(frozen, std::move(s), t_end, output_every);
  ArnoldRun out;
  out.reference = *ref;
  out.records = std::move(run.records);
  out.final_state = std::move(run.final_state);
  return out;
}

}  // namespace mbions
