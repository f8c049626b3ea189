#include "mbions/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mbions {
namespace {

double face_flux(double gm, double g0, double gp, double a, Interpolation interp) {
  if (interp == Interpolation::linear) return a * g0;
  // Third-order reconstruction of the primitive; clamping the flux to
  // [0, g0] keeps every cell nonnegative without touching conservation.
  const double F = a * (g0 + (1.0 - a) * (2.0 - a) / 6.0 * (gp - g0) + (1.0 - a) * (1.0 + a) / 6.0 * (g0 - gm));
  return std::clamp(F, 0.0, std::max(g0, 0.0));
}

double shift_right(Eigen::Ref<Eigen::VectorXd> line, double cells, bool periodic, Interpolation interp) {
  const Eigen::Index n = line.size();
  const double whole = std::floor(cells);
  const double a = cells - whole;
  const auto k = static_cast<Eigen::Index>(whole);

  if (periodic) {
    Eigen::VectorXd g(n), F(n);
    for (Eigen::Index j = 0; j < n; ++j) g[j] = line[((j - k) % n + n) % n];
    if (a == 0.0) {
      line = g;
      return 0.0;
    }
    for (Eigen::Index j = 0; j < n; ++j) F[j] = face_flux(g[(j - 1 + n) % n], g[j], g[(j + 1) % n], a, interp);
    for (Eigen::Index j = 0; j < n; ++j) line[j] = g[j] - F[j] + F[(j - 1 + n) % n];
    return 0.0;
  }

  // Open line: G[p] holds position p - 1, with zero ghosts at both ends and
  // room for everything that leaves on the right.
  const Eigen::Index m = n + k + 2;
  Eigen::VectorXd G = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < n; ++j) G[1 + k + j] = line[j];
  Eigen::VectorXd F = Eigen::VectorXd::Zero(m);
  if (a != 0.0)
    for (Eigen::Index p = 0; p + 1 < m; ++p) F[p] = face_flux(p > 0 ? G[p - 1] : 0.0, G[p], G[p + 1], a, interp);
  double lost = 0.0;
  for (Eigen::Index p = 0; p < m; ++p) {
    const double value = G[p] - F[p] + (p > 0 ? F[p - 1] : 0.0);
    if (p >= 1 && p <= n) line[p - 1] = value;
    else lost += value;
  }
  return lost;
}

Eigen::MatrixXd moment_basis(const VelocityGrid& vg) {
  const int d = vg.dim;
  Eigen::MatrixXd basis(vg.size(), d + 2);
  basis.col(0).setOnes();
  for (int a = 0; a < d; ++a) basis.col(1 + a) = vg.component(a).matrix();
  basis.col(d + 1) = vg.speed_squared().matrix();
  return basis;
}

Eigen::VectorXd equilibrium_from_basis(const VelocityGrid& vg, const Eigen::MatrixXd& basis,
                                       const Eigen::Ref<const Eigen::VectorXd>& row, const BgkOptions& options,
                                       bool* matched) {
  const int d = vg.dim;
  const Eigen::VectorXd m = basis.transpose() * row;
  const Eigen::VectorXd m_abs = basis.cwiseAbs().transpose() * row.cwiseAbs();
  if (matched) *matched = false;
  const double n_sum = m[0];
  if (!(n_sum > 0.0)) return row;
  const Eigen::VectorXd u = m.segment(1, d) / n_sum;
  const double theta = (m[d + 1] / n_sum - u.squaredNorm()) / d;
  if (!(theta > 0.0)) return row;

  const double n_phys = n_sum * vg.cell_measure;
  Eigen::VectorXd alpha(d + 2);
  alpha[0] = std::log(n_phys) - 0.5 * d * std::log(2.0 * std::numbers::pi * theta) - u.squaredNorm() / (2.0 * theta);
  alpha.segment(1, d) = u / theta;
  alpha[d + 1] = -1.0 / (2.0 * theta);
  auto sampled = [&] {
    Eigen::VectorXd M = (basis * alpha).array().exp().matrix();
    return M;
  };

  // Newton on the convex dual L(alpha) = sum exp(basis alpha) - alpha . m.
  Eigen::VectorXd M = sampled();
  const Eigen::VectorXd tol = 1e-13 * m_abs.array() + 1e-300;
  for (int it = 0; it < options.max_newton; ++it) {
    const Eigen::VectorXd r = basis.transpose() * M - m;
    if ((r.array().abs() <= tol.array()).all()) {
      if (matched) *matched = true;
      return M;
    }
    const Eigen::MatrixXd J = basis.transpose() * M.asDiagonal() * basis;
    const Eigen::VectorXd step = J.ldlt().solve(-r);
    const double L0 = M.sum() - alpha.dot(m);
    const double slope = r.dot(step);
    double t = 1.0;
    Eigen::VectorXd trial_alpha, trial_M;
    for (int h = 0; h < 40; ++h) {
      trial_alpha = alpha + t * step;
      trial_M = (basis * trial_alpha).array().exp().matrix();
      const double L1 = trial_M.sum() - trial_alpha.dot(m);
      if (!std::isfinite(L1)) {
        t *= 0.5;
        continue;
      }
      // Near the root L changes below its round-off; the residual still shows progress.
      if (L1 <= L0 + 1e-4 * t * slope || (basis.transpose() * trial_M - m).norm() < r.norm()) break;
      t *= 0.5;
    }
    alpha = trial_alpha;
    M = trial_M;
  }
  // Fallback: sampled continuous Maxwellian with the row's mass.
  alpha[0] = std::log(n_phys) - 0.5 * d * std::log(2.0 * std::numbers::pi * theta) - u.squaredNorm() / (2.0 * theta);
  alpha.segment(1, d) = u / theta;
  alpha[d + 1] = -1.0 / (2.0 * theta);
  M = sampled();
  M *= n_sum / M.sum();
  return M;
}

void check_same_shape(const PhaseDistribution& f, const char* where) {
  if (!f.domain || f.values.rows() != f.domain->x.size() || f.values.cols() != f.domain->v.size())
    throw std::invalid_argument(std::string(where) + ": distribution does not match its domain");
}

}  // namespace

const char* to_string(Interpolation i) { return i == Interpolation::linear ? "linear" : "cubic"; }

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "linear") return Interpolation::linear;
  if (s == "cubic") return Interpolation::cubic;
  throw ValidationError("unknown interpolation '" + s + "' (expected linear or cubic)");
}

Moments moments(const PhaseDistribution& f) {
  check_same_shape(f, "moments");
  const VelocityGrid& vg = f.domain->v;
  Moments out;
  out.density = SpatialField(f.domain, f.values.rowwise().sum() * vg.cell_measure);
  out.momentum.resize(f.values.rows(), vg.dim);
  for (int a = 0; a < vg.dim; ++a) out.momentum.col(a) = f.values * vg.component(a).matrix() * vg.cell_measure;
  out.kinetic_energy_density = SpatialField(f.domain, f.values * (0.5 * vg.speed_squared()).matrix() * vg.cell_measure);
  return out;
}

SpatialField density(const PhaseDistribution& f) {
  check_same_shape(f, "density");
  return SpatialField(f.domain, f.values.rowwise().sum() * f.domain->v.cell_measure);
}

double total_mass(const PhaseDistribution& f) { return f.values.sum() * f.domain->phase_cell_measure(); }

double total_kinetic_energy(const PhaseDistribution& f) {
  const Eigen::VectorXd w = (0.5 * f.domain->v.speed_squared()).matrix();
  return (f.values * w).sum() * f.domain->phase_cell_measure();
}

PhaseDistribution maxwellian(double beta, const SpatialField& phi, Species species) {
  if (!(beta > 0.0)) throw std::invalid_argument("maxwellian: beta must be > 0");
  const VelocityGrid& vg = phi.domain->v;
  const double exponent_max = (beta * phi.values.array()).maxCoeff();
  if (!std::isfinite(exponent_max) || exponent_max > 700.0)
    throw SolverError("maxwellian: exp(beta*phi) overflow");
  const double norm = std::pow(beta / (2.0 * std::numbers::pi), 0.5 * vg.dim);
  const Eigen::RowVectorXd gauss = (norm * (-0.5 * beta * vg.speed_squared()).exp()).matrix().transpose();
  const Eigen::VectorXd spatial = (beta * phi.values.array()).exp().matrix();
  return PhaseDistribution(phi.domain, spatial * gauss, species);
}

PhaseDistribution local_maxwellian(const SpatialField& density, double temperature, const Eigen::VectorXd& drift,
                                   Species species) {
  if (!(temperature > 0.0)) throw std::invalid_argument("local_maxwellian: temperature must be > 0");
  const VelocityGrid& vg = density.domain->v;
  if (drift.size() != vg.dim) throw std::invalid_argument("local_maxwellian: drift dimension mismatch");
  Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(vg.size());
  for (int a = 0; a < vg.dim; ++a) r2 += (vg.component(a) - drift[a]).square();
  const double norm = std::pow(2.0 * std::numbers::pi * temperature, -0.5 * vg.dim);
  const Eigen::RowVectorXd gauss = (norm * (-0.5 * r2 / temperature).exp()).matrix().transpose();
  return PhaseDistribution(density.domain, density.values * gauss, species);
}

double shift_line(Eigen::Ref<Eigen::VectorXd> line, double cells, bool periodic, Interpolation interp) {
  if (cells == 0.0) return 0.0;
  if (cells > 0.0) return shift_right(line, cells, periodic, interp);
  line.reverseInPlace();
  const double lost = shift_right(line, -cells, periodic, interp);
  line.reverseInPlace();
  return lost;
}

PhaseDistribution advect_x(const PhaseDistribution& f, double dt, const TransportOptions& options) {
  check_same_shape(f, "advect_x");
  if (!(dt > 0.0)) throw std::invalid_argument("advect_x: dt must be > 0");
  const SpatialGrid& xg = f.domain->x;
  const VelocityGrid& vg = f.domain->v;
  for (int a = 0; a < xg.dim; ++a) {
    if (vg.v_max * dt > options.cfl_max * xg.length[a]) {
      std::ostringstream os;
      os << "advect_x: v_max*dt = " << vg.v_max * dt << " exceeds cfl_max*L = " << options.cfl_max * xg.length[a];
      throw CflError(os.str());
    }
  }

  PhaseDistribution out = f;
  const Eigen::Index nv = vg.size();
  const int n = xg.n;

  if (xg.dim == 1 && xg.geometry == Geometry::periodic) {
    const Eigen::ArrayXd vx = vg.component(0);
    Eigen::VectorXd line(n);
    for (Eigen::Index k = 0; k < nv; ++k) {
      line = out.values.col(k);
      shift_line(line, vx[k] * dt / xg.h[0], true, options.interpolation);
      out.values.col(k) = line;
    }
  } else if (xg.dim == 1) {
    // Specular walls: (x, v) and its mirror (-x, -v) form one free-streaming
    // line of period 2L.
    const Eigen::ArrayXd vx = vg.component(0);
    Eigen::VectorXd line(2 * n);
    for (Eigen::Index k = 0; k < nv; ++k) {
      if (!(vx[k] > 0.0)) continue;
      const Eigen::Index km = vg.mirror(k, 0);
      for (int j = 0; j < n; ++j) {
        line[j] = f.values(n - 1 - j, km);
        line[n + j] = f.values(j, k);
      }
      shift_line(line, vx[k] * dt / xg.h[0], true, options.interpolation);
      for (int j = 0; j < n; ++j) {
        out.values(n - 1 - j, km) = line[j];
        out.values(j, k) = line[n + j];
      }
    }
  } else {
    const Eigen::ArrayXd v0 = vg.component(0);
    const Eigen::ArrayXd v1 = vg.component(1);
    Eigen::VectorXd line(n);
    for (Eigen::Index k = 0; k < nv; ++k) {
      const double c0 = v0[k] * dt / xg.h[0];
      const double c1 = v1[k] * dt / xg.h[1];
      for (int i1 = 0; i1 < n; ++i1) {
        for (int i0 = 0; i0 < n; ++i0) line[i0] = out.values(xg.flat(i0, i1), k);
        shift_line(line, c0, true, options.interpolation);
        for (int i0 = 0; i0 < n; ++i0) out.values(xg.flat(i0, i1), k) = line[i0];
      }
      for (int i0 = 0; i0 < n; ++i0) {
        for (int i1 = 0; i1 < n; ++i1) line[i1] = out.values(xg.flat(i0, i1), k);
        shift_line(line, c1, true, options.interpolation);
        for (int i1 = 0; i1 < n; ++i1) out.values(xg.flat(i0, i1), k) = line[i1];
      }
    }
  }
  return out;
}

PhaseDistribution advect_v(const PhaseDistribution& f, const ElectricField& E, int sign, double dt,
                           const TransportOptions& options, SupportMonitor* monitor) {
  check_same_shape(f, "advect_v");
  if (!(dt > 0.0)) throw std::invalid_argument("advect_v: dt must be > 0");
  if (sign != 1 && sign != -1) throw std::invalid_argument("advect_v: sign must be +1 or -1");
  const SpatialGrid& xg = f.domain->x;
  const VelocityGrid& vg = f.domain->v;
  if (E.rows() != xg.size() || E.cols() != xg.dim)
    throw std::invalid_argument("advect_v: electric field does not match the spatial grid");
  const double max_shift = E.cwiseAbs().maxCoeff() * dt;
  if (max_shift > options.velocity_cfl_max * vg.v_max) {
    std::ostringstream os;
    os << "advect_v: |E|*dt = " << max_shift << " exceeds velocity_cfl_max*v_max = "
       << options.velocity_cfl_max * vg.v_max;
    throw CflError(os.str());
  }

  PhaseDistribution out = f;
  const int n = vg.n;
  double lost = 0.0;
  Eigen::VectorXd line(n);
  for (Eigen::Index c = 0; c < xg.size(); ++c) {
    for (int axis = 0; axis < xg.dim; ++axis) {
      const double cells = sign * E(c, axis) * dt / vg.h;
      if (cells == 0.0) continue;
      auto row = out.values.row(c);
      if (vg.dim == 1) {
        line = row.transpose();
        lost += shift_line(line, cells, false, options.interpolation);
        row = line.transpose();
      } else {
        for (int other = 0; other < n; ++other) {
          auto idx = [&](int j) { return axis == 0 ? Eigen::Index(j) * n + other : Eigen::Index(other) * n + j; };
          for (int j = 0; j < n; ++j) line[j] = row[idx(j)];
          lost += shift_line(line, cells, false, options.interpolation);
          for (int j = 0; j < n; ++j) row[idx(j)] = line[j];
        }
      }
    }
  }
  if (monitor) monitor->lost_mass += lost * f.domain->phase_cell_measure();
  return out;
}

Eigen::VectorXd specular_reflect(const Eigen::VectorXd& v, const Eigen::VectorXd& n) {
  if (v.size() != n.size()) throw std::invalid_argument("specular_reflect: dimension mismatch");
  if (std::abs(n.norm() - 1.0) > 1e-12) throw std::invalid_argument("specular_reflect: normal must be a unit vector");
  return v - 2.0 * v.dot(n) * n;
}

Trajectory trace_characteristic(const SpatialGrid& grid, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                const FieldHistory& field, double t0, double t1,
                                const CharacteristicOptions& options) {
  if (x0.size() != grid.dim || v0.size() < grid.dim)
    throw std::invalid_argument("trace_characteristic: dimension mismatch");
  Trajectory tr{x0, v0, 0};
  const int steps = std::max(1, options.steps);
  const double tau = (t1 - t0) / steps;

  auto accelerate = [&](double t, double scale) {
    const Eigen::VectorXd a = field(tr.x, t);
    tr.v.head(grid.dim) += scale * a;
  };
  auto drift = [&] {
    tr.x += tau * tr.v.head(grid.dim);
    for (int a = 0; a < grid.dim; ++a) {
      const double L = grid.length[a];
      if (grid.geometry == Geometry::periodic) {
        tr.x[a] = std::fmod(tr.x[a], L);
        if (tr.x[a] < 0.0) tr.x[a] += L;
        continue;
      }
      while (tr.x[a] < 0.0 || tr.x[a] > L) {
        tr.x[a] = tr.x[a] < 0.0 ? -tr.x[a] : 2.0 * L - tr.x[a];
        Eigen::VectorXd normal = Eigen::VectorXd::Zero(tr.v.size());
        normal[a] = 1.0;
        tr.v = specular_reflect(tr.v, normal);
        if (++tr.reflections > options.max_reflections)
          throw std::runtime_error("trace_characteristic: too many wall reflections");
      }
    }
  };

  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * tau;
    accelerate(t, 0.5 * tau);
    drift();
    accelerate(t + tau, 0.5 * tau);
  }
  return tr;
}

FieldHistory frozen_field_history(const SpatialGrid& grid, const ElectricField& E) {
  return [grid, E](const Eigen::VectorXd& x, double) {
    auto locate = [&](int axis, int& i0, int& i1, double& w) {
      const double s = x[axis] / grid.h[axis] - 0.5;
      const double fl = std::floor(s);
      w = s - fl;
      i0 = static_cast<int>(fl);
      i1 = i0 + 1;
      if (grid.geometry == Geometry::periodic) {
        i0 = ((i0 % grid.n) + grid.n) % grid.n;
        i1 = ((i1 % grid.n) + grid.n) % grid.n;
      } else {
        i0 = std::clamp(i0, 0, grid.n - 1);
        i1 = std::clamp(i1, 0, grid.n - 1);
      }
    };
    Eigen::VectorXd out(grid.dim);
    if (grid.dim == 1) {
      int i0, i1;
      double w;
      locate(0, i0, i1, w);
      out[0] = (1.0 - w) * E(i0, 0) + w * E(i1, 0);
      return out;
    }
    int a0, a1, b0, b1;
    double wa, wb;
    locate(0, a0, a1, wa);
    locate(1, b0, b1, wb);
    for (int c = 0; c < 2; ++c)
      out[c] = (1 - wa) * (1 - wb) * E(grid.flat(a0, b0), c) + wa * (1 - wb) * E(grid.flat(a1, b0), c) +
               (1 - wa) * wb * E(grid.flat(a0, b1), c) + wa * wb * E(grid.flat(a1, b1), c);
    return out;
  };
}

Eigen::VectorXd local_equilibrium(const VelocityGrid& vgrid, const Eigen::Ref<const Eigen::VectorXd>& row,
                                  const BgkOptions& options, bool* matched) {
  return equilibrium_from_basis(vgrid, moment_basis(vgrid), row, options, matched);
}

double row_entropy(const Eigen::Ref<const Eigen::VectorXd>& row) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    const double v = row[k];
    if (v > 1e-300) s += v * std::log(v);
  }
  return s;
}

PhaseDistribution bgk_relax(const PhaseDistribution& f, double rate, double dt, const BgkOptions& options,
                            BgkStats* stats) {
  check_same_shape(f, "bgk_relax");
  if (!(rate >= 0.0)) throw std::invalid_argument("bgk_relax: rate must be >= 0");
  if (!(dt >= 0.0)) throw std::invalid_argument("bgk_relax: dt must be >= 0");
  PhaseDistribution out = f;
  if (rate * dt == 0.0) return out;
  const VelocityGrid& vg = f.domain->v;
  const Eigen::MatrixXd basis = moment_basis(vg);
  const double keep = std::exp(-rate * dt);
  BgkStats local;
  Eigen::VectorXd row, relaxed;
  for (Eigen::Index c = 0; c < f.values.rows(); ++c) {
    row = f.values.row(c).transpose();
    if (row.sum() * vg.cell_measure < options.density_floor) {
      ++local.skipped;
      continue;
    }
    bool matched = false;
    const Eigen::VectorXd M = equilibrium_from_basis(vg, basis, row, options, &matched);
    if (!matched) ++local.fallback;
    relaxed = keep * row + (1.0 - keep) * M;
    // The H-theorem guarantees a decrease; equality cases can round upward.
    if (row_entropy(relaxed) > row_entropy(row)) {
      ++local.entropy_guarded;
      continue;
    }
    out.values.row(c) = relaxed.transpose();
    ++local.relaxed;
  }
  if (stats) {
    stats->relaxed += local.relaxed;
    stats->skipped += local.skipped;
    stats->entropy_guarded += local.entropy_guarded;
    stats->fallback += local.fallback;
  }
  return out;
}

}  // namespace mbions
