#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "mbions/domain.hpp"
#include "mbions/fields.hpp"

namespace mbions {

enum class Species { ion, electron };

/// Row-major so that the velocity row of each spatial cell is contiguous.
using PhaseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Nonnegative phase-space density. Rows are spatial cells, columns are
/// velocity cells (both flattened as in SpatialGrid / VelocityGrid).
struct PhaseDistribution {
  DomainPtr domain;
  PhaseMatrix values;
  Species species = Species::ion;

  PhaseDistribution() = default;
  PhaseDistribution(DomainPtr d, PhaseMatrix v, Species s)
      : domain(std::move(d)), values(std::move(v)), species(s) {}

  static PhaseDistribution zeros(DomainPtr d, Species s) {
    const auto nx = d->x.size(), nv = d->v.size();
    return {std::move(d), PhaseMatrix::Zero(nx, nv), s};
  }
};

/// Thrown when a transport substep violates its step-size guard.
class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Moments {
  SpatialField density;
  Eigen::MatrixXd momentum;  // one column per velocity component
  SpatialField kinetic_energy_density;
};

Moments moments(const PhaseDistribution& f);
SpatialField density(const PhaseDistribution& f);
double total_mass(const PhaseDistribution& f);
double total_kinetic_energy(const PhaseDistribution& f);

/// (beta/2pi)^{d/2} exp(-beta(|v|^2/2 - phi(x))) sampled at cell centres.
PhaseDistribution maxwellian(double beta, const SpatialField& phi, Species species = Species::electron);

/// n(x) (2 pi theta)^{-d/2} exp(-|v - u|^2 / (2 theta)) with a uniform
/// temperature and drift.
PhaseDistribution local_maxwellian(const SpatialField& density, double temperature,
                                   const Eigen::VectorXd& drift, Species species);

enum class Interpolation { linear, cubic };

const char* to_string(Interpolation i);
Interpolation interpolation_from_string(const std::string& s);

struct TransportOptions {
  Interpolation interpolation = Interpolation::cubic;
  /// |v_max dt| <= cfl_max * L for spatial transport.
  double cfl_max = 1.0;
  /// |a dt| <= velocity_cfl_max * v_max for velocity transport.
  double velocity_cfl_max = 1.0;

  bool operator==(const TransportOptions&) const = default;
};

/// Accumulates mass pushed out of the truncated velocity box.
struct SupportMonitor {
  double lost_mass = 0.0;
};

/// Shift of one line of cell averages by `cells` (positive to the right),
/// flux form. Periodic lines wrap; open lines drop what leaves and return it.
double shift_line(Eigen::Ref<Eigen::VectorXd> line, double cells, bool periodic, Interpolation interp);

/// f(x, v) <- f(x - v dt, v): periodic wrap, or specular walls through the
/// unfolded 2L-periodic line pairing v with its mirror image.
PhaseDistribution advect_x(const PhaseDistribution& f, double dt, const TransportOptions& options = {});

/// f(x, v) <- f(x, v - a dt) with a = sign * E(x) on the first spatial-dim
/// velocity components. Mass leaving [-v_max, v_max] is added to `monitor`.
PhaseDistribution advect_v(const PhaseDistribution& f, const ElectricField& E, int sign, double dt,
                           const TransportOptions& options = {}, SupportMonitor* monitor = nullptr);

/// v - 2 (v.n) n.
Eigen::VectorXd specular_reflect(const Eigen::VectorXd& v, const Eigen::VectorXd& n);

using FieldHistory = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

struct Trajectory {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  int reflections = 0;
};

struct CharacteristicOptions {
  int steps = 1000;
  int max_reflections = 1000;
};

/// Integrates X' = V, V' = E(X, t) (velocity Verlet) from t0 to t1 with
/// periodic wrap or specular reflection at the walls of the spatial grid.
Trajectory trace_characteristic(const SpatialGrid& grid, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                const FieldHistory& field, double t0, double t1,
                                const CharacteristicOptions& options = {});

/// Field history from a single frozen sample, linearly interpolated in space.
FieldHistory frozen_field_history(const SpatialGrid& grid, const ElectricField& E);

struct BgkOptions {
  /// Cells with local density below this are left untouched.
  double density_floor = 1e-12;
  int max_newton = 50;
};

struct BgkStats {
  int relaxed = 0;
  int skipped = 0;
  int entropy_guarded = 0;  // round-off increase detected, cell kept
  int fallback = 0;         // moment matching failed, sampled Maxwellian used
};

/// Local Maxwellian of one velocity row whose discrete moments (1, v, |v|^2)
/// equal those of the row.
Eigen::VectorXd local_equilibrium(const VelocityGrid& vgrid, const Eigen::Ref<const Eigen::VectorXd>& row,
                                  const BgkOptions& options = {}, bool* matched = nullptr);

/// sum_k f_k log f_k over one velocity row, 0 log 0 = 0 (no measure factor).
double row_entropy(const Eigen::Ref<const Eigen::VectorXd>& row);

/// f <- e^{-rate dt} f + (1 - e^{-rate dt}) M[f], cell by cell.
PhaseDistribution bgk_relax(const PhaseDistribution& f, double rate, double dt, const BgkOptions& options = {},
                            BgkStats* stats = nullptr);

}  // namespace mbions
