#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "mbions/diagnostics.hpp"
#include "mbions/fields.hpp"
#include "mbions/kinetics.hpp"

namespace mbions {

/// Initial data or a running state left the regime where the energy budget
/// can be met: kinetic energy reached (or exceeds a fraction a of) E0.
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cumulative velocity-cutoff loss exceeded its budget.
class SupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A step failed; the message carries the simulation time.
class StepError : public std::runtime_error {
 public:
  StepError(double t, const std::string& what);
  double time() const { return time_; }

 private:
  double time_;
};

struct ReducedIonsConfig {
  double E0 = 1.0;
  /// Initial ion kinetic energy must not exceed compatibility * E0 (< 1).
  double compatibility = 0.9;
  double cfl = 0.5;
  /// Fixed time step when > 0, otherwise cfl * min(h_x / v_max, h_v / |E|_inf).
  double dt = 0.0;
  bool freeze_ions = false;
  /// Abort when the velocity-cutoff loss exceeds this fraction of m0.
  double max_mass_loss = 1e-6;
  FieldSolverOptions field;
  TransportOptions transport;
};

struct SimState {
  double t = 0.0;
  long step = 0;
  PhaseDistribution f_plus;
  double beta = 0.0;
  SpatialField phi;
  double m0 = 0.0;
  double E0 = 0.0;
  double C0 = 0.0;
  double cumulative_mass_loss = 0.0;
  double field_time_integral = 0.0;  // int_0^t |E|_inf ds
  double initial_max_f = 0.0;
  BetaSolution last_solve;
};

/// m0 d log beta + 2 int beta phi e^{beta phi}; constant along exact solutions.
double beta_invariant(double m0, int velocity_dim, double beta, const SpatialField& phi);
double beta_invariant(const SimState& state);

/// Corollary-style bracket for beta: [m0 d / (2 E0), exp((C0 + 2|Omega|/e) / (m0 d))].
std::pair<double, double> beta_bounds(const SimState& state);

/// m0 d/(2 beta) + (lambda^2/2) int |grad phi|^2 + int <|v|^2/2 f+>.
double total_energy(const SimState& state);

DiagnosticsRecord diagnose(const SimState& state);

SimState init(const ReducedIonsConfig& config, PhaseDistribution f0);

double stable_time_step(const SimState& state, const ReducedIonsConfig& config);

/// Strang step: x(dt/2), field solve, v(dt), x(dt/2), then the end-of-step
/// (beta, phi) solve so the state is self-consistent.
SimState step(const SimState& state, double dt, const ReducedIonsConfig& config);

struct RunControl {
  double t_end = 0.0;
  int output_every = 1;
  std::vector<double> snapshot_times;
  std::function<void(const SimState&)> on_snapshot;
  std::function<void(const DiagnosticsRecord&)> on_record;
};

struct RunResult {
  SimState final_state;
  std::vector<DiagnosticsRecord> records;
};

RunResult run(const ReducedIonsConfig& config, PhaseDistribution f0, const RunControl& control);

}  // namespace mbions
