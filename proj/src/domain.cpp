#include "mbions/domain.hpp"

#include <sstream>
#include <vector>

namespace mbions {

const char* to_string(Geometry g) { return g == Geometry::periodic ? "periodic" : "interval"; }

Geometry geometry_from_string(const std::string& s) {
  if (s == "periodic") return Geometry::periodic;
  if (s == "interval") return Geometry::interval;
  throw ValidationError("unknown geometry '" + s + "' (expected periodic or interval)");
}

void DomainSpec::validate() const {
  std::vector<std::string> errors;
  if (spatial_dim != 1 && spatial_dim != 2) errors.push_back("spatial_dim must be 1 or 2");
  if (velocity_dim != 1 && velocity_dim != 2) errors.push_back("velocity_dim must be 1 or 2");
  if (velocity_dim < spatial_dim) errors.push_back("velocity_dim must be >= spatial_dim");
  if (spatial_dim == 2 && geometry != Geometry::periodic)
    errors.push_back("two-dimensional domains must be periodic");
  if (n_x < 4) errors.push_back("n_x must be >= 4");
  if (n_v < 4) errors.push_back("n_v must be >= 4");
  if (!(v_max > 0.0)) errors.push_back("v_max must be > 0");
  for (int a = 0; a < std::min(spatial_dim, 2); ++a)
    if (!(lengths[a] > 0.0)) errors.push_back("length of axis " + std::to_string(a) + " must be > 0");
  if (!(lambda_D > 0.0)) errors.push_back("lambda_D must be > 0");
  if (errors.empty()) return;
  std::ostringstream os;
  os << "invalid domain:";
  for (const auto& e : errors) os << "\n  - " << e;
  throw ValidationError(os.str());
}

Eigen::ArrayXd SpatialGrid::axis_nodes(int axis) const {
  Eigen::ArrayXd out(n);
  for (int i = 0; i < n; ++i) out[i] = center(axis, i);
  return out;
}

Eigen::ArrayXd SpatialGrid::coordinate(int axis) const {
  Eigen::ArrayXd out(size());
  for (Eigen::Index c = 0; c < size(); ++c) out[c] = center(axis, axis_index(c, axis));
  return out;
}

Eigen::ArrayXd VelocityGrid::component(int axis) const {
  Eigen::ArrayXd out(size());
  for (Eigen::Index c = 0; c < size(); ++c) out[c] = node(axis_index(c, axis));
  return out;
}

Eigen::ArrayXd VelocityGrid::speed_squared() const {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(size());
  for (int a = 0; a < dim; ++a) out += component(a).square();
  return out;
}

Eigen::Index VelocityGrid::mirror(Eigen::Index cell, int axis) const {
  if (dim == 1) return n - 1 - cell;
  int k0 = axis_index(cell, 0);
  int k1 = axis_index(cell, 1);
  if (axis == 0) k0 = n - 1 - k0;
  else k1 = n - 1 - k1;
  return Eigen::Index(k0) * n + k1;
}

DomainPtr build_domain(const DomainSpec& spec) {
  spec.validate();
  auto d = std::make_shared<Domain>();
  d->spec = spec;

  SpatialGrid& x = d->x;
  x.dim = spec.spatial_dim;
  x.n = spec.n_x;
  x.geometry = spec.geometry;
  x.cell_measure = 1.0;
  x.total_measure = 1.0;
  for (int a = 0; a < x.dim; ++a) {
    x.length[a] = spec.lengths[a];
    x.h[a] = spec.lengths[a] / spec.n_x;
    x.cell_measure *= x.h[a];
    x.total_measure *= spec.lengths[a];
  }

  VelocityGrid& v = d->v;
  v.dim = spec.velocity_dim;
  v.n = spec.n_v;
  v.v_max = spec.v_max;
  v.h = 2.0 * spec.v_max / spec.n_v;
  v.cell_measure = v.dim == 1 ? v.h : v.h * v.h;
  v.total_measure = v.dim == 1 ? 2.0 * spec.v_max : 4.0 * spec.v_max * spec.v_max;
  return d;
}

double integrate_spatial(const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != grid.size())
    throw std::invalid_argument("integrate_spatial: field has " + std::to_string(values.size()) +
                                " values, grid has " + std::to_string(grid.size()) + " cells");
  return values.sum() * grid.cell_measure;
}

double integrate_spatial(const SpatialField& field) {
  if (!field.domain) throw std::invalid_argument("integrate_spatial: field has no grid");
  return integrate_spatial(field.domain->x, field.values);
}

void require_same_grid(const SpatialField& a, const SpatialField& b, const char* where) {
  if (!a.domain || !b.domain || a.size() != b.size() || a.domain->x.n != b.domain->x.n ||
      a.domain->x.dim != b.domain->x.dim)
    throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

}  // namespace mbions
