#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracgrid/time_grid.hpp"

namespace fracgrid {

/// Cell-centred rectangular grid on [0, L_x] (x [0, L_y]) with uniform spacing h.
/// The outer ring of cells carries Dirichlet data; the remaining cells are Omega.
/// A single-cell "point" domain has no boundary and no spatial operator.
class DomainGrid {
public:
  static DomainGrid interval(double length, std::size_t cells) {
    return DomainGrid(1, {length, 0.0}, {cells, 1});
  }

  static DomainGrid rectangle(double lengthX, double lengthY, std::size_t cellsX, std::size_t cellsY) {
    return DomainGrid(2, {lengthX, lengthY}, {cellsX, cellsY});
  }

  /// One cell of unit volume and no boundary: the spatially homogeneous problem.
  static DomainGrid point() {
    DomainGrid g;
    g.dim_ = 1;
    g.extents_ = {1.0, 0.0};
    g.cells_ = {1, 1};
    g.h_ = 1.0;
    g.volume_ = 1.0;
    g.boundary_.assign(1, 0);
    return g;
  }

  int dimension() const noexcept { return dim_; }
  double spacing() const noexcept { return h_; }
  double cell_volume() const noexcept { return volume_; }
  std::size_t cells(int axis) const { return cells_.at(static_cast<std::size_t>(axis)); }
  double extent(int axis) const { return extents_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const noexcept { return cells_[0] * cells_[1]; }
  bool is_point() const noexcept { return size() == 1; }

  std::size_t index(std::size_t i, std::size_t j = 0) const noexcept { return i + cells_[0] * j; }
  bool is_boundary(std::size_t cell) const { return boundary_.at(cell) != 0; }

  std::size_t interior_count() const noexcept {
    return static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), 0));
  }
  /// |Omega| = interior cell count x cell volume.
  double measure() const noexcept { return static_cast<double>(interior_count()) * volume_; }

  std::array<double, 2> center(std::size_t cell) const {
    const std::size_t i = cell % cells_[0];
    const std::size_t j = cell / cells_[0];
    return {(static_cast<double>(i) + 0.5) * h_,
            dim_ == 2 ? (static_cast<double>(j) + 0.5) * h_ : 0.0};
  }

  /// Forward neighbour of cell along axis, or -1 when the cell is last on that axis.
  long forward(std::size_t cell, int axis) const {
    const std::size_t i = cell % cells_[0];
    const std::size_t j = cell / cells_[0];
    if (axis == 0) return i + 1 < cells_[0] ? static_cast<long>(cell + 1) : -1;
    if (dim_ < 2) return -1;
    return j + 1 < cells_[1] ? static_cast<long>(cell + cells_[0]) : -1;
  }

  friend bool operator==(const DomainGrid&, const DomainGrid&) = default;

private:
  DomainGrid() = default;

  DomainGrid(int dim, std::array<double, 2> extents, std::array<std::size_t, 2> cells)
      : dim_(dim), extents_(extents), cells_(cells) {
    for (int a = 0; a < dim_; ++a) {
      if (!(extents_[a] > 0.0)) throw std::invalid_argument("DomainGrid: extents must be > 0");
      if (cells_[a] < 3)
        throw std::invalid_argument("DomainGrid: need at least 3 cells per axis (boundary ring + interior)");
    }
    h_ = extents_[0] / static_cast<double>(cells_[0]);
    if (dim_ == 2) {
      const double hy = extents_[1] / static_cast<double>(cells_[1]);
      if (std::abs(hy - h_) > 1e-12 * h_)
        throw std::invalid_argument("DomainGrid: spacing must be equal on both axes");
    }
    volume_ = std::pow(h_, dim_);
    boundary_.assign(size(), 0);
    for (std::size_t c = 0; c < size(); ++c) {
      const std::size_t i = c % cells_[0];
      const std::size_t j = c / cells_[0];
      bool edge = i == 0 || i + 1 == cells_[0];
      if (dim_ == 2) edge = edge || j == 0 || j + 1 == cells_[1];
      boundary_[c] = edge ? 1 : 0;
    }
  }

  int dim_ = 1;
  std::array<double, 2> extents_{1.0, 0.0};
  std::array<std::size_t, 2> cells_{1, 1};
  double h_ = 1.0;
  double volume_ = 1.0;
  std::vector<char> boundary_;
};

/// Space-time scalar field u[m][cell], m = 0..M; slice 0 is the initial datum.
class GridFunction {
public:
  GridFunction(DomainGrid domain, TimeGrid time)
      : domain_(std::move(domain)), time_(time), values_((time_.steps() + 1) * domain_.size(), 0.0) {}

  const DomainGrid& domain() const noexcept { return domain_; }
  const TimeGrid& time_grid() const noexcept { return time_; }
  std::size_t slices() const noexcept { return time_.steps() + 1; }

  std::span<double> slice(std::size_t m) {
    return std::span<double>(values_).subspan(m * domain_.size(), domain_.size());
  }
  std::span<const double> slice(std::size_t m) const {
    return std::span<const double>(values_).subspan(m * domain_.size(), domain_.size());
  }

  double& at(std::size_t m, std::size_t cell) { return values_.at(m * domain_.size() + cell); }
  double at(std::size_t m, std::size_t cell) const { return values_.at(m * domain_.size() + cell); }

  std::span<const double> values() const noexcept { return values_; }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }

  GridFunction negated() const {
    GridFunction out = *this;
    for (double& v : out.values_) v = -v;
    return out;
  }

private:
  DomainGrid domain_;
  TimeGrid time_;
  std::vector<double> values_;
};

/// max{0, sup u_0, sup of u on the boundary cells for m >= 1}.
inline double data_level(const GridFunction& u) {
  double level = 0.0;
  const auto& d = u.domain();
  for (std::size_t c = 0; c < d.size(); ++c) level = std::max(level, u.at(0, c));
  for (std::size_t m = 1; m < u.slices(); ++m)
    for (std::size_t c = 0; c < d.size(); ++c)
      if (d.is_boundary(c)) level = std::max(level, u.at(m, c));
  return level;
}

/// Squared norm of the forward-difference gradient at a cell; axes without a
/// forward neighbour contribute nothing.
template <class Values>
double forward_gradient_sq(const DomainGrid& d, const Values& v, std::size_t cell) {
  if (d.is_point()) return 0.0;
  double acc = 0.0;
  for (int axis = 0; axis < d.dimension(); ++axis) {
    const long nb = d.forward(cell, axis);
    if (nb < 0) continue;
    const double g = (v[static_cast<std::size_t>(nb)] - v[cell]) / d.spacing();
    acc += g * g;
  }
  return acc;
}

} // namespace fracgrid
