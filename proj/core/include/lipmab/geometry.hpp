#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace lipmab {

inline constexpr int kMaxDim = 8;

// Point in [0,1]^d with inline storage; the round loop never allocates.
class Point {
 public:
  Point() = default;
  explicit Point(int d, double fill = 0.0);
  Point(std::initializer_list<double> xs);

  int dim() const noexcept { return d_; }
  double& operator[](int k) noexcept { return x_[static_cast<std::size_t>(k)]; }
  double operator[](int k) const noexcept { return x_[static_cast<std::size_t>(k)]; }
  const double* begin() const noexcept { return x_.data(); }
  const double* end() const noexcept { return x_.data() + d_; }

  friend bool operator==(const Point& a, const Point& b) noexcept;

 private:
  std::array<double, kMaxDim> x_{};
  int d_ = 0;
};

double distance_sq(const Point& a, const Point& b) noexcept;
double distance(const Point& a, const Point& b) noexcept;
bool in_unit_cube(const Point& x) noexcept;

// Axis-aligned box, closed on both sides.
struct Box {
  Point lo;
  Point hi;

  Point center() const;
  bool contains(const Point& x) const noexcept;
  double distance_to(const Point& x) const noexcept;
};

using CellCoords = std::array<std::size_t, kMaxDim>;

// Regular partition of [0,1]^d into cells of side h. Cells are half-open
// [i h, (i+1) h) per axis except the last one, which is closed at 1.
class PartitionGeometry {
 public:
  PartitionGeometry(int d, double h);

  int dim() const noexcept { return d_; }
  double side() const noexcept { return h_; }
  std::size_t per_axis() const noexcept { return m_; }
  std::size_t size() const noexcept { return k_; }
  double diameter() const noexcept;

  std::size_t cell_of(const Point& x) const;
  CellCoords coords(std::size_t index) const;
  std::size_t index_of(const CellCoords& c) const;
  Box cell_box(std::size_t index) const;
  Point cell_center(std::size_t index) const;

  double lower(std::size_t i) const noexcept;
  double upper(std::size_t i) const noexcept;

 private:
  int d_;
  double h_;
  std::size_t m_;
  std::size_t k_;
};

enum class RegionShape { Box, Ball };

// A cell of the arena: a partition box or a safe ball clipped to the cube.
struct Region {
  RegionShape shape = RegionShape::Box;
  Box bounds;       // the box itself, or the ball's clipped bounding box
  Point center;     // box center or ball center
  double radius = 0.0;

  bool contains(const Point& x) const noexcept;
  // Nearest point of the region; identity on members.
  Point project(const Point& x) const;
};

// Per-axis counts of a centered tensor grid.
using GridCounts = std::array<int, kMaxDim>;

// Tensor grid with counts[k] points on axis k placed at the centers of
// equal sub-intervals of the region's bounding box, axis 0 fastest. For
// balls every point is projected into the region (non-expansive, so the
// covering radius of the box grid is preserved).
std::vector<Point> centered_grid(const Region& region, const GridCounts& counts);

// Points per axis so that spacing <= s on every axis of the bounding box.
GridCounts counts_for_spacing(const Region& region, double s);

std::size_t grid_size(const GridCounts& counts, int d) noexcept;

// Cell family the protocol runs on: a regular partition or a set of
// disjoint safe balls from the packing reduction.
class Arena {
 public:
  static Arena from_partition(const PartitionGeometry& g);
  // No validation here; see packing_reduce.
  static Arena from_balls(int d, std::span<const Point> centers, double sigma);

  bool is_partition() const noexcept { return partition_.has_value(); }
  const PartitionGeometry* partition() const noexcept {
    return partition_ ? &*partition_ : nullptr;
  }
  int dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return regions_.size(); }
  const Region& region(std::size_t i) const { return regions_.at(i); }
  const Point& center(std::size_t i) const { return regions_.at(i).center; }
  const std::vector<Region>& regions() const noexcept { return regions_; }

  // Largest distance from a region's representative point to any member:
  // h sqrt(d)/2 for boxes, sigma for balls.
  double center_radius() const noexcept { return center_radius_; }
  // Nominal side used for in-cell rescaling: h, or 2 sigma.
  double scale() const noexcept { return scale_; }

 private:
  int d_ = 0;
  std::optional<PartitionGeometry> partition_;
  std::vector<Region> regions_;
  double center_radius_ = 0.0;
  double scale_ = 0.0;
};

}  // namespace lipmab
