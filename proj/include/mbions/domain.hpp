#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mbions {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Geometry { periodic, interval };

const char* to_string(Geometry g);
Geometry geometry_from_string(const std::string& s);

/// Phase-space domain description. The spatial part is either a periodic box
/// or, in one dimension only, the interval (0, L) with specular walls.
struct DomainSpec {
  int spatial_dim = 1;
  Geometry geometry = Geometry::periodic;
  std::array<double, 2> lengths{6.283185307179586, 6.283185307179586};
  int n_x = 64;
  int velocity_dim = 1;
  double v_max = 6.0;
  int n_v = 64;
  double lambda_D = 1.0;

  /// Throws ValidationError listing every violated constraint.
  void validate() const;

  bool operator==(const DomainSpec&) const = default;
};

/// Uniform cell-centred grid of the spatial domain. Multi-dimensional cells
/// are flattened row-major (the last axis varies fastest).
struct SpatialGrid {
  int dim = 1;
  int n = 0;  // cells per axis
  std::array<double, 2> length{0.0, 0.0};
  std::array<double, 2> h{0.0, 0.0};
  Geometry geometry = Geometry::periodic;
  double cell_measure = 0.0;
  double total_measure = 0.0;

  Eigen::Index size() const { return dim == 1 ? n : Eigen::Index(n) * n; }
  double center(int axis, int index) const { return (index + 0.5) * h[axis]; }
  int axis_index(Eigen::Index cell, int axis) const {
    if (dim == 1) return static_cast<int>(cell);
    return axis == 0 ? static_cast<int>(cell / n) : static_cast<int>(cell % n);
  }
  Eigen::Index flat(int i0, int i1) const { return Eigen::Index(i0) * n + i1; }

  /// Cell centres of one axis.
  Eigen::ArrayXd axis_nodes(int axis) const;
  /// Coordinate `axis` of every flattened cell.
  Eigen::ArrayXd coordinate(int axis) const;
};

/// Uniform cell-centred grid of [-v_max, v_max]^d.
struct VelocityGrid {
  int dim = 1;
  int n = 0;
  double v_max = 0.0;
  double h = 0.0;
  double cell_measure = 0.0;
  double total_measure = 0.0;

  Eigen::Index size() const { return dim == 1 ? n : Eigen::Index(n) * n; }
  double node(int index) const { return -v_max + (index + 0.5) * h; }
  int axis_index(Eigen::Index cell, int axis) const {
    if (dim == 1) return static_cast<int>(cell);
    return axis == 0 ? static_cast<int>(cell / n) : static_cast<int>(cell % n);
  }
  /// Component `axis` of every flattened velocity cell.
  Eigen::ArrayXd component(int axis) const;
  /// |v|^2 of every flattened velocity cell.
  Eigen::ArrayXd speed_squared() const;
  /// Flattened index of the cell mirrored through v_axis -> -v_axis.
  Eigen::Index mirror(Eigen::Index cell, int axis) const;
};

struct Domain {
  DomainSpec spec;
  SpatialGrid x;
  VelocityGrid v;

  double phase_cell_measure() const { return x.cell_measure * v.cell_measure; }
};

using DomainPtr = std::shared_ptr<const Domain>;

DomainPtr build_domain(const DomainSpec& spec);

/// Scalar field on the spatial grid (potential, densities, ...).
struct SpatialField {
  DomainPtr domain;
  Eigen::VectorXd values;

  SpatialField() = default;
  SpatialField(DomainPtr d, Eigen::VectorXd v) : domain(std::move(d)), values(std::move(v)) {}

  static SpatialField constant(DomainPtr d, double c) {
    const auto n = d->x.size();
    return {std::move(d), Eigen::VectorXd::Constant(n, c)};
  }
  Eigen::Index size() const { return values.size(); }
  const SpatialGrid& grid() const { return domain->x; }
};

/// Midpoint quadrature over the spatial domain.
double integrate_spatial(const SpatialField& field);
double integrate_spatial(const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

void require_same_grid(const SpatialField& a, const SpatialField& b, const char* where);

}  // namespace mbions
