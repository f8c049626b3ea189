#include "mbions/reduced_ions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mbions {
namespace {

std::string time_prefix(double t, const std::string& what) {
  std::ostringstream os;
  os << "at t = " << t << ": " << what;
  return os.str();
}

BetaSolution solve_fields(const PhaseDistribution& f, double E0, const FieldSolverOptions& options,
                          const SpatialField* guess) {
  const SpatialField n = density(f);
  const double kinetic = total_kinetic_energy(f);
  const double E1 = E0 - kinetic;
  if (!(E1 > 0.0)) {
    std::ostringstream os;
    os << "ion kinetic energy " << kinetic << " reached the energy budget E0 = " << E0
       << "; the compatibility condition forbids this, so the discretisation has failed";
    throw CompatibilityError(os.str());
  }
  return find_beta(n, integrate_spatial(n), E1, f.domain->spec.lambda_D, options, guess);
}

}  // namespace

StepError::StepError(double t, const std::string& what) : std::runtime_error(time_prefix(t, what)), time_(t) {}

double beta_invariant(double m0, int velocity_dim, double beta, const SpatialField& phi) {
  const Eigen::ArrayXd bp = beta * phi.values.array();
  return m0 * velocity_dim * std::log(beta) + 2.0 * integrate_spatial(phi.grid(), (bp * bp.exp()).matrix());
}

double beta_invariant(const SimState& s) {
  return beta_invariant(s.m0, s.f_plus.domain->spec.velocity_dim, s.beta, s.phi);
}

std::pair<double, double> beta_bounds(const SimState& s) {
  const double md = s.m0 * s.f_plus.domain->spec.velocity_dim;
  const double omega = s.f_plus.domain->x.total_measure;
  return {md / (2.0 * s.E0), std::exp((s.C0 + 2.0 * omega * std::exp(-1.0)) / md)};
}

double total_energy(const SimState& s) {
  const int d = s.f_plus.domain->spec.velocity_dim;
  return s.m0 * d / (2.0 * s.beta) + field_energy(s.phi, s.f_plus.domain->spec.lambda_D) +
         total_kinetic_energy(s.f_plus);
}

DiagnosticsRecord diagnose(const SimState& s) {
  const Domain& dom = *s.f_plus.domain;
  const int d = dom.spec.velocity_dim;
  DiagnosticsRecord r;
  r.step = s.step;
  r.t = s.t;
  r.mass_ion = total_mass(s.f_plus);
  r.mass_electron = integrate_spatial(dom.x, (s.beta * s.phi.values.array()).exp().matrix());
  r.kinetic_ion = total_kinetic_energy(s.f_plus);
  r.kinetic_electron = s.m0 * d / (2.0 * s.beta);
  r.field_energy = field_energy(s.phi, dom.spec.lambda_D);
  r.total_energy = r.energy_parts_sum();
  r.beta = s.beta;
  r.beta_invariant = beta_invariant(s);
  r.entropy_ion = entropy(s.f_plus);
  r.cumulative_mass_loss = s.cumulative_mass_loss;
  r.max_speed_bound = s.field_time_integral;
  r.tail_fraction = tail_mass_fraction(s.f_plus);
  r.max_density = density(s.f_plus).values.maxCoeff();
  r.density_bound = s.initial_max_f * std::pow(2.0 * (dom.v.v_max + s.field_time_integral), dom.v.dim);
  return r;
}

SimState init(const ReducedIonsConfig& config, PhaseDistribution f0) {
  if (!(config.compatibility > 0.0 && config.compatibility < 1.0))
    throw ValidationError("compatibility factor a must satisfy 0 < a < 1");
  if (!(config.E0 > 0.0)) throw ValidationError("E0 must be > 0");
  if (!f0.domain) throw std::invalid_argument("init: initial distribution has no domain");
  if ((f0.values.array() < 0.0).any()) throw std::invalid_argument("init: initial distribution must be nonnegative");
  f0.species = Species::ion;

  SimState s;
  s.m0 = total_mass(f0);
  if (!(s.m0 > 0.0)) throw std::invalid_argument("init: initial distribution has zero mass");
  s.E0 = config.E0;
  const double kinetic = total_kinetic_energy(f0);
  if (kinetic > config.compatibility * config.E0) {
    std::ostringstream os;
    os << "compatibility violated: initial ion kinetic energy " << kinetic << " > a*E0 = "
       << config.compatibility * config.E0 << " (a = " << config.compatibility << " < 1 is required)";
    throw CompatibilityError(os.str());
  }
  s.initial_max_f = f0.values.maxCoeff();
  s.f_plus = std::move(f0);
  s.last_solve = solve_fields(s.f_plus, s.E0, config.field, nullptr);
  s.beta = s.last_solve.beta;
  s.phi = s.last_solve.phi;
  s.C0 = beta_invariant(s);
  return s;
}

double stable_time_step(const SimState& s, const ReducedIonsConfig& config) {
  if (config.dt > 0.0) return config.dt;
  const Domain& dom = *s.f_plus.domain;
  double h_x = dom.x.h[0];
  if (dom.x.dim == 2) h_x = std::min(h_x, dom.x.h[1]);
  double limit = h_x / dom.v.v_max;
  const double e_max = max_field_norm(electric_field(s.phi, config.field.gradient_order));
  if (e_max > 0.0) limit = std::min(limit, dom.v.h / e_max);
  return config.cfl * limit;
}

SimState step(const SimState& state, double dt, const ReducedIonsConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  SimState s = state;
  const bool move = !config.freeze_ions;
  if (move) s.f_plus = advect_x(s.f_plus, 0.5 * dt, config.transport);

  const BetaSolution mid = solve_fields(s.f_plus, s.E0, config.field, &s.phi);
  const ElectricField E = electric_field(mid.phi, config.field.gradient_order);
  SupportMonitor monitor;
  if (move) s.f_plus = advect_v(s.f_plus, E, +1, dt, config.transport, &monitor);
  s.field_time_integral += dt * max_field_norm(E);
  if (move) s.f_plus = advect_x(s.f_plus, 0.5 * dt, config.transport);

  s.cumulative_mass_loss += monitor.lost_mass;
  if (s.cumulative_mass_loss > config.max_mass_loss * s.m0) {
    std::ostringstream os;
    os << "velocity cutoff lost " << s.cumulative_mass_loss << " of mass m0 = " << s.m0
       << " (budget " << config.max_mass_loss << " m0); increase v_max";
    throw SupportError(os.str());
  }

  s.last_solve = solve_fields(s.f_plus, s.E0, config.field, &mid.phi);
  s.beta = s.last_solve.beta;
  s.phi = s.last_solve.phi;
  s.t += dt;
  ++s.step;
  return s;
}

RunResult run(const ReducedIonsConfig& config, PhaseDistribution f0, const RunControl& control) {
  RunResult out;
  SimState s = init(config, std::move(f0));
  auto emit = [&](const SimState& st) {
    out.records.push_back(diagnose(st));
    if (control.on_record) control.on_record(out.records.back());
  };
  emit(s);

  std::vector<double> snaps = control.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  while (next_snap < snaps.size() && snaps[next_snap] <= s.t) {
    if (control.on_snapshot) control.on_snapshot(s);
    ++next_snap;
  }

  const double eps_t = 1e-12 * std::max(1.0, control.t_end);
  const int every = std::max(1, control.output_every);
  bool last_recorded = true;
  while (s.t < control.t_end - eps_t) {
    double dt = stable_time_step(s, config);
    double target = control.t_end;
    if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
    if (s.t + dt > target - eps_t) dt = target - s.t;
    try {
      s = step(s, dt, config);
    } catch (const std::exception& e) {
      throw StepError(s.t, e.what());
    }
    last_recorded = false;
    if (s.step % every == 0) {
      emit(s);
      last_recorded = true;
    }
    while (next_snap < snaps.size() && snaps[next_snap] <= s.t + eps_t) {
      if (control.on_snapshot) control.on_snapshot(s);
      ++next_snap;
    }
  }
  if (!last_recorded) emit(s);
  out.final_state = std::move(s);
  return out;
}

}  // namespace mbions
