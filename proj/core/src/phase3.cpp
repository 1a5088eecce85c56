#include "lipmab/phase3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

Point UnitCubeMap::to_region(const Point& u) const {
  Point x(u.dim());
  for (int k = 0; k < u.dim(); ++k) x[k] = origin[k] + width[k] * u[k];
  return x;
}

Point UnitCubeMap::to_unit(const Point& x) const {
  Point u(x.dim());
  for (int k = 0; k < x.dim(); ++k) u[k] = (x[k] - origin[k]) / width[k];
  return u;
}

UnitCubeMap rescale(const Region& region) {
  const int d = region.bounds.lo.dim();
  UnitCubeMap m{region.bounds.lo, Point(d)};
  for (int k = 0; k < d; ++k) m.width[k] = region.bounds.hi[k] - region.bounds.lo[k];
  return m;
}

int epoch_grid_count(double lipschitz_scale, int d, int epoch) {
  if (epoch < 0) throw DomainError("epoch must be non-negative");
  const double dd = static_cast<double>(d) + 2.0;
  const double v = std::pow(lipschitz_scale, 2.0 / dd) * std::exp2(static_cast<double>(epoch) / dd);
  // Round-off guard: exact powers such as 2^(6/3) must not become 5.
  const double r = std::round(v);
  const double c = std::abs(v - r) <= 1e-9 * std::max(1.0, v) ? r : std::ceil(v);
  return std::max(1, static_cast<int>(c));
}

std::vector<Point> epoch_grid(const Region& region, int epoch, double lipschitz, double h, int d) {
  GridCounts counts{};
  counts.fill(1);
  const int n = epoch_grid_count(lipschitz * h, d, epoch);
  for (int k = 0; k < d; ++k) counts[static_cast<std::size_t>(k)] = n;
  return centered_grid(region, counts);
}

ZoomLearner::ZoomLearner(Region region, double lipschitz, double scale, double ucb_constant)
    : region_(std::move(region)), lipschitz_(lipschitz), scale_(scale), c_(ucb_constant) {
  if (!(lipschitz > 0.0) || !(scale > 0.0)) throw DomainError("zoom learner needs positive L and scale");
  start_epoch(0);
}

void ZoomLearner::start_epoch(int e) {
  if (e > 62) throw InternalError("zoom learner epoch overflow");
  e_ = e;
  t_ = 0;
  log_tau_ = static_cast<double>(e) * std::log(2.0);
  grid_ = epoch_grid(region_, e, lipschitz_, scale_, region_.bounds.lo.dim());
  counts_.assign(grid_.size(), 0);
  sums_.assign(grid_.size(), 0.0);
  index_.assign(grid_.size(), 0.0);
  unvisited_ = 0;
}

void ZoomLearner::refresh_index(std::size_t i) {
  const double n = static_cast<double>(counts_[i]);
  index_[i] = sums_[i] / n + std::sqrt(c_ * log_tau_ / n);
}

std::size_t ZoomLearner::choose() const {
  if (unvisited_ < grid_.size()) return unvisited_;
  std::size_t best = 0;
  for (std::size_t i = 1; i < index_.size(); ++i) {
    if (index_[i] > index_[best]) best = i;
  }
  return best;
}

void ZoomLearner::update(std::size_t i, const PlayerOutcome& outcome) {
  if (i >= grid_.size()) throw DomainError("zoom update: point not in the current grid");
  if (!outcome.collided) {
    ++counts_[i];
    sums_[i] += outcome.reward;
    refresh_index(i);
    while (unvisited_ < grid_.size() && counts_[unvisited_] > 0) ++unvisited_;
  }
  ++t_;
  ++total_;
  if (t_ >= epoch_length()) start_epoch(e_ + 1);
}

double ZoomLearner::mean(std::size_t i) const {
  const auto n = counts_.at(i);
  return n == 0 ? 0.0 : sums_[i] / static_cast<double>(n);
}

std::size_t ZoomLearner::best_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (counts_[i] > 0 && (counts_[best] == 0 || mean(i) > mean(best))) best = i;
  }
  return best;
}

}  // namespace lipmab
