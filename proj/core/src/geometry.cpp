#include "lipmab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

namespace {

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) {
    throw DomainError("dimension must be in [1, " + std::to_string(kMaxDim) +
                      "], got " + std::to_string(d));
  }
}

// ceil(x) that ignores round-off just above an integer.
std::size_t robust_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::size_t>(std::max(r, 0.0));
  }
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace

Point::Point(int d, double fill) : d_(d) {
  check_dim(d);
  x_.fill(0.0);
  for (int k = 0; k < d; ++k) x_[static_cast<std::size_t>(k)] = fill;
}

Point::Point(std::initializer_list<double> xs) : d_(static_cast<int>(xs.size())) {
  check_dim(d_);
  std::copy(xs.begin(), xs.end(), x_.begin());
}

bool operator==(const Point& a, const Point& b) noexcept {
  if (a.d_ != b.d_) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

double distance_sq(const Point& a, const Point& b) noexcept {
  double s = 0.0;
  for (int k = 0; k < a.dim(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

double distance(const Point& a, const Point& b) noexcept { return std::sqrt(distance_sq(a, b)); }

bool in_unit_cube(const Point& x) noexcept {
  for (int k = 0; k < x.dim(); ++k) {
    if (!(x[k] >= 0.0 && x[k] <= 1.0)) return false;
  }
  return x.dim() > 0;
}

Point Box::center() const {
  Point c(lo.dim());
  for (int k = 0; k < lo.dim(); ++k) c[k] = 0.5 * (lo[k] + hi[k]);
  return c;
}

bool Box::contains(const Point& x) const noexcept {
  for (int k = 0; k < lo.dim(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

double Box::distance_to(const Point& x) const noexcept {
  double s = 0.0;
  for (int k = 0; k < lo.dim(); ++k) {
    double t = 0.0;
    if (x[k] < lo[k]) t = lo[k] - x[k];
    else if (x[k] > hi[k]) t = x[k] - hi[k];
    s += t * t;
  }
  return std::sqrt(s);
}

PartitionGeometry::PartitionGeometry(int d, double h) : d_(d), h_(h) {
  check_dim(d);
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("cell side h must be in (0, 1]");
  m_ = robust_ceil(1.0 / h);
  k_ = 1;
  for (int k = 0; k < d; ++k) {
    if (k_ > std::numeric_limits<std::size_t>::max() / m_) {
      throw DomainError("cell count overflows");
    }
    k_ *= m_;
  }
}

double PartitionGeometry::diameter() const noexcept { return h_ * std::sqrt(static_cast<double>(d_)); }

double PartitionGeometry::lower(std::size_t i) const noexcept {
  return static_cast<double>(i) * h_;
}

double PartitionGeometry::upper(std::size_t i) const noexcept {
  return i + 1 >= m_ ? 1.0 : static_cast<double>(i + 1) * h_;
}

std::size_t PartitionGeometry::cell_of(const Point& x) const {
  if (x.dim() != d_ || !in_unit_cube(x)) {
    throw DomainError("point outside [0,1]^d");
  }
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int k = 0; k < d_; ++k) {
    const double v = x[k];
    auto i = static_cast<std::size_t>(std::min(std::floor(v / h_), static_cast<double>(m_ - 1)));
    // Align with the boundaries as computed by lower(), whatever the
    // rounding in v / h was.
    while (i > 0 && v < lower(i)) --i;
    while (i + 1 < m_ && v >= lower(i + 1)) ++i;
    index += i * stride;
    stride *= m_;
  }
  return index;
}

CellCoords PartitionGeometry::coords(std::size_t index) const {
  if (index >= k_) throw DomainError("cell index out of range");
  CellCoords c{};
  for (int k = 0; k < d_; ++k) {
    c[static_cast<std::size_t>(k)] = index % m_;
    index /= m_;
  }
  return c;
}

std::size_t PartitionGeometry::index_of(const CellCoords& c) const {
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int k = 0; k < d_; ++k) {
    if (c[static_cast<std::size_t>(k)] >= m_) throw DomainError("cell coordinate out of range");
    index += c[static_cast<std::size_t>(k)] * stride;
    stride *= m_;
  }
  return index;
}

Box PartitionGeometry::cell_box(std::size_t index) const {
  const CellCoords c = coords(index);
  Box b{Point(d_), Point(d_)};
  for (int k = 0; k < d_; ++k) {
    b.lo[k] = lower(c[static_cast<std::size_t>(k)]);
    b.hi[k] = upper(c[static_cast<std::size_t>(k)]);
  }
  return b;
}

Point PartitionGeometry::cell_center(std::size_t index) const { return cell_box(index).center(); }

bool Region::contains(const Point& x) const noexcept {
  if (!bounds.contains(x)) return false;
  if (shape == RegionShape::Ball) {
    return distance_sq(x, center) <= radius * radius * (1.0 + 1e-12);
  }
  return true;
}

Point Region::project(const Point& x) const {
  Point p = x;
  if (shape == RegionShape::Ball) {
    const double r = distance(p, center);
    if (r > radius) {
      for (int k = 0; k < p.dim(); ++k) p[k] = center[k] + (p[k] - center[k]) * (radius / r);
    }
  }
  for (int k = 0; k < p.dim(); ++k) p[k] = std::clamp(p[k], bounds.lo[k], bounds.hi[k]);
  return p;
}

GridCounts counts_for_spacing(const Region& region, double s) {
  if (!(s > 0.0)) throw DomainError("grid spacing must be positive");
  GridCounts n{};
  n.fill(1);
  for (int k = 0; k < region.bounds.lo.dim(); ++k) {
    const double w = region.bounds.hi[k] - region.bounds.lo[k];
    n[static_cast<std::size_t>(k)] = static_cast<int>(std::max<std::size_t>(1, robust_ceil(w / s)));
  }
  return n;
}

std::size_t grid_size(const GridCounts& counts, int d) noexcept {
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]);
  return n;
}

std::vector<Point> centered_grid(const Region& region, const GridCounts& counts) {
  const int d = region.bounds.lo.dim();
  const std::size_t total = grid_size(counts, d);
  std::vector<Point> out;
  out.reserve(total);
  std::array<int, kMaxDim> idx{};
  for (std::size_t t = 0; t < total; ++t) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double lo = region.bounds.lo[k];
      const double w = region.bounds.hi[k] - lo;
      p[k] = lo + (static_cast<double>(idx[kk]) + 0.5) * (w / counts[kk]);
    }
    out.push_back(region.shape == RegionShape::Ball ? region.project(p) : p);
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (++idx[kk] < counts[kk]) break;
      idx[kk] = 0;
    }
  }
  return out;
}

Arena Arena::from_partition(const PartitionGeometry& g) {
  Arena a;
  a.d_ = g.dim();
  a.partition_ = g;
  a.regions_.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    Region r;
    r.shape = RegionShape::Box;
    r.bounds = g.cell_box(i);
    r.center = r.bounds.center();
    a.regions_.push_back(r);
  }
  a.center_radius_ = g.diameter() / 2.0;
  a.scale_ = g.side();
  return a;
}

Arena Arena::from_balls(int d, std::span<const Point> centers, double sigma) {
  check_dim(d);
  Arena a;
  a.d_ = d;
  a.regions_.reserve(centers.size());
  for (const Point& z : centers) {
    if (z.dim() != d || !in_unit_cube(z)) throw DomainError("ball center outside [0,1]^d");
    Region r;
    r.shape = RegionShape::Ball;
    r.center = z;
    r.radius = sigma;
    r.bounds = Box{Point(d), Point(d)};
    for (int k = 0; k < d; ++k) {
      r.bounds.lo[k] = std::max(0.0, z[k] - sigma);
      r.bounds.hi[k] = std::min(1.0, z[k] + sigma);
    }
    a.regions_.push_back(r);
  }
  a.center_radius_ = sigma;
  a.scale_ = 2.0 * sigma;
  return a;
}

}  // namespace lipmab
