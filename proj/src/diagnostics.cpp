#include "mbions/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace mbions {

double DiagnosticsRecord::energy_parts_sum() const {
  double sum = 0.0;
  for (double part : {kinetic_ion, kinetic_electron, field_energy})
    if (!std::isnan(part)) sum += part;
  return sum;
}

std::vector<std::string> diagnostics_columns() {
  return {"step",          "t",                "mass_ion",         "mass_electron",     "kinetic_ion",
          "kinetic_electron", "field_energy",  "total_energy",     "beta",              "beta_invariant",
          "entropy_ion",   "entropy_electron", "relative_entropy", "arnold_functional", "dissipation",
          "cumulative_mass_loss", "max_speed_bound", "tail_fraction", "max_density",    "density_bound", "mb_deviation"};
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_diagnostics_header(std::ostream& os) {
  os << "#schema=" << kDiagnosticsSchemaVersion << "\r\n";
  const auto cols = diagnostics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\r\n";
}

void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& r) {
  os << r.step;
  for (double v : {r.t, r.mass_ion, r.mass_electron, r.kinetic_ion, r.kinetic_electron, r.field_energy,
                   r.total_energy, r.beta, r.beta_invariant, r.entropy_ion, r.entropy_electron, r.relative_entropy,
                   r.arnold_functional, r.dissipation, r.cumulative_mass_loss, r.max_speed_bound, r.tail_fraction,
                   r.max_density, r.density_bound, r.mb_deviation})
    os << ',' << format_number(v);
  os << "\r\n";
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
  write_diagnostics_header(os);
  for (const auto& r : records) write_diagnostics_row(os, r);
}

double entropy(const PhaseDistribution& f) {
  // Row-by-row in a fixed order: bgk_relax compares the same row sums, so a
  // per-row decrease implies a decrease of this total in floating point.
  double s = 0.0;
  for (Eigen::Index c = 0; c < f.values.rows(); ++c) s += row_entropy(f.values.row(c).transpose());
  return s * f.domain->phase_cell_measure();
}

double relative_entropy(const PhaseDistribution& f, const PhaseDistribution& F) {
  if (f.values.rows() != F.values.rows() || f.values.cols() != F.values.cols())
    throw std::invalid_argument("relative_entropy: distributions live on different grids");
  if (!(F.values.array() > 0.0).all()) throw std::invalid_argument("relative_entropy: reference must be positive");
  double s = 0.0;
  for (Eigen::Index c = 0; c < f.values.rows(); ++c) {
    for (Eigen::Index k = 0; k < f.values.cols(); ++k) {
      const double a = f.values(c, k);
      const double b = F.values(c, k);
      s += (a > 1e-300 ? a * std::log(a / b) : 0.0) - a + b;
    }
  }
  return s * f.domain->phase_cell_measure();
}

double arnold_functional(const PhaseDistribution& f, const SpatialField& phi, const PhaseDistribution& F_ref,
                         const SpatialField& Phi_ref, double epsilon, double beta, double lambda_D) {
  require_same_grid(phi, Phi_ref, "arnold_functional");
  const SpatialField diff(phi.domain, phi.values - Phi_ref.values);
  return epsilon * (relative_entropy(f, F_ref) + 0.5 * beta * lambda_D * lambda_D * gradient_norm_squared(diff));
}

double tail_mass_fraction(const PhaseDistribution& f, double fraction) {
  const Eigen::ArrayXd r2 = f.domain->v.speed_squared();
  const double limit = fraction * f.domain->v.v_max;
  const Eigen::VectorXd outside = (r2 > limit * limit).cast<double>().matrix();
  const double total = f.values.sum();
  if (!(total > 0.0)) return 0.0;
  return (f.values * outside).sum() / total;
}

StationaryReference stationary_reference(const SpatialField& n_ion, double m0, double E1, double lambda_D,
                                         const FieldSolverOptions& options) {
  StationaryReference ref;
  ref.solution = find_beta(n_ion, m0, E1, lambda_D, options);
  ref.beta = ref.solution.beta;
  ref.Phi = ref.solution.phi;
  ref.F = maxwellian(ref.beta, ref.Phi, Species::electron);
  ref.F.values *= m0 / total_mass(ref.F);
  const Eigen::SparseMatrix<double> L = laplacian(n_ion.grid());
  const Eigen::VectorXd r = -lambda_D * lambda_D * (L * ref.Phi.values) + density(ref.F).values - n_ion.values;
  ref.residual = r.lpNorm<Eigen::Infinity>();
  return ref;
}

}  // namespace mbions
