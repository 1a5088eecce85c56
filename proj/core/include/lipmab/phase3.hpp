#pragma once

#include <cstdint>
#include <vector>

#include "lipmab/env.hpp"
#include "lipmab/geometry.hpp"

namespace lipmab {

// Affine bijection between [0,1]^d and a region's bounding box.
struct UnitCubeMap {
  Point origin;
  Point width;

  Point to_region(const Point& u) const;
  Point to_unit(const Point& x) const;
};

UnitCubeMap rescale(const Region& region);

// max(1, ceil((L h)^(2/(d+2)) * 2^(e/(d+2)))) points per axis.
int epoch_grid_count(double lipschitz_scale, int d, int epoch);

std::vector<Point> epoch_grid(const Region& region, int epoch, double lipschitz, double h, int d);

// Epochic discretize-and-explore: epoch e lasts 2^e rounds and runs UCB1
// on a fresh centered grid. Statistics are not carried across epochs.
class ZoomLearner {
 public:
  ZoomLearner(Region region, double lipschitz, double scale, double ucb_constant = 2.0);

  std::size_t choose() const;
  const Point& point(std::size_t i) const { return grid_.at(i); }
  // Collided outcomes only advance the clock.
  void update(std::size_t i, const PlayerOutcome& outcome);

  int epoch() const noexcept { return e_; }
  std::uint64_t epoch_round() const noexcept { return t_; }
  std::uint64_t epoch_length() const noexcept { return std::uint64_t{1} << e_; }
  std::uint64_t total_rounds() const noexcept { return total_; }
  const std::vector<Point>& grid() const noexcept { return grid_; }
  std::uint64_t count(std::size_t i) const { return counts_.at(i); }
  double mean(std::size_t i) const;
  std::size_t best_index() const;
  const Region& region() const noexcept { return region_; }

 private:
  void start_epoch(int e);
  void refresh_index(std::size_t i);

  Region region_;
  double lipschitz_;
  double scale_;
  double c_;
  int e_ = 0;
  std::uint64_t t_ = 0;
  std::uint64_t total_ = 0;
  double log_tau_ = 0.0;
  std::vector<Point> grid_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sums_;
  std::vector<double> index_;
  std::size_t unvisited_ = 0;  // all points below this index have been visited
};

}  // namespace lipmab
