#include "lipmab/env.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

CollisionModel CollisionModel::distance_threshold(double rho) {
  if (!(rho > 0.0)) throw DomainError("collision threshold rho must be positive");
  return CollisionModel{CollisionKind::DistanceThreshold, rho};
}

void collision_mask(const CollisionModel& model, const PartitionGeometry* geometry,
                    std::span<const Point> actions, std::vector<std::uint8_t>& collided) {
  const std::size_t n = actions.size();
  collided.assign(n, 0);
  if (model.kind == CollisionKind::Partition) {
    if (geometry == nullptr) throw DomainError("partition collisions need a geometry");
    // Small N is the common case; quadratic scan beats sorting there.
    std::size_t cells_small[64];
    std::vector<std::size_t> cells_big;
    std::size_t* cells = cells_small;
    if (n > 64) {
      cells_big.resize(n);
      cells = cells_big.data();
    }
    for (std::size_t i = 0; i < n; ++i) cells[i] = geometry->cell_of(actions[i]);
    if (n <= 64) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (cells[i] == cells[j]) collided[i] = collided[j] = 1;
        }
      }
      return;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cells[a] < cells[b] || (cells[a] == cells[b] && a < b);
    });
    for (std::size_t i = 1; i < n; ++i) {
      if (cells[order[i]] == cells[order[i - 1]]) collided[order[i]] = collided[order[i - 1]] = 1;
    }
    return;
  }
  const double r2 = model.rho * model.rho;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_unit_cube(actions[i])) throw DomainError("action outside [0,1]^d");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance_sq(actions[i], actions[j]) <= r2) collided[i] = collided[j] = 1;
    }
  }
}

double sample_reward(const Instance& instance, const Point& x, Rng& rng,
                     std::uint64_t* clamp_counter) {
  double m = instance.mean(x);
  if (m < 0.0 || m > 1.0) {
    m = std::clamp(m, 0.0, 1.0);
    if (clamp_counter != nullptr) ++*clamp_counter;
  }
  return rng.uniform01() < m ? 1.0 : 0.0;
}

std::vector<PlayerOutcome> resolve_round(const CollisionModel& model,
                                         const PartitionGeometry* geometry,
                                         const Instance& instance,
                                         std::span<const Point> actions, Rng& rng) {
  std::vector<std::uint8_t> mask;
  collision_mask(model, geometry, actions, mask);
  std::vector<PlayerOutcome> out(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (mask[i] != 0) {
      out[i] = PlayerOutcome{true, 0.0};
    } else {
      out[i] = PlayerOutcome{false, sample_reward(instance, actions[i], rng)};
    }
  }
  return out;
}

Environment::Environment(const Instance& instance, CollisionModel model,
                         std::optional<PartitionGeometry> geometry, std::size_t n_players,
                         std::uint64_t seed)
    : instance_(&instance), model_(model), geometry_(std::move(geometry)), n_(n_players), rng_(seed) {
  if (model_.kind == CollisionKind::Partition && !geometry_) {
    throw DomainError("partition collisions need a geometry");
  }
  mask_.reserve(n_);
}

void Environment::resolve(std::span<const Point> actions, std::span<PlayerOutcome> out) {
  if (actions.size() != n_ || out.size() != n_) {
    throw ConfigError("round has " + std::to_string(actions.size()) + " actions, expected " +
                      std::to_string(n_));
  }
  collision_mask(model_, geometry_ ? &*geometry_ : nullptr, actions, mask_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (mask_[i] != 0) {
      out[i].collided = true;
      out[i].reward = 0.0;
    } else {
      out[i].collided = false;
      out[i].reward = sample_reward(*instance_, actions[i], rng_, &clamps_);
    }
  }
}

int default_sup_resolution(int d) noexcept {
  if (d == 1) return 512;
  if (d == 2) return 128;
  return 32;
}

namespace {

SupremumResult grid_supremum(const Instance& instance, const Region& region, int resolution) {
  const int d = region.bounds.lo.dim();
  if (resolution < 2) throw DomainError("supremum resolution must be >= 2");
  double radius_sq = 0.0;
  for (int k = 0; k < d; ++k) {
    const double step = (region.bounds.hi[k] - region.bounds.lo[k]) / (resolution - 1);
    radius_sq += 0.25 * step * step;
  }
  std::array<int, kMaxDim> idx{};
  double best = -1.0;
  for (;;) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const double lo = region.bounds.lo[k];
      const double w = region.bounds.hi[k] - lo;
      const int i = idx[static_cast<std::size_t>(k)];
      p[k] = i + 1 == resolution ? region.bounds.hi[k] : lo + w * i / (resolution - 1);
    }
    if (region.shape == RegionShape::Ball) p = region.project(p);
    best = std::max(best, instance.mean(p));
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < resolution) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k == d) break;
  }
  return SupremumResult{best, instance.lipschitz() * std::sqrt(radius_sq), false};
}

}  // namespace

SupremumResult cell_supremum(const Instance& instance, const Arena& arena, std::size_t index,
                             int resolution) {
  const Region& region = arena.region(index);
  if (auto v = instance.analytic_sup(region)) return SupremumResult{*v, 0.0, true};
  return grid_supremum(instance, region,
                       resolution > 0 ? resolution : default_sup_resolution(arena.dim()));
}

SupremumResult cell_supremum(const Instance& instance, const PartitionGeometry& g,
                             std::size_t index, int resolution) {
  Region region;
  region.bounds = g.cell_box(index);
  region.center = region.bounds.center();
  if (auto v = instance.analytic_sup(region)) return SupremumResult{*v, 0.0, true};
  return grid_supremum(instance, region, resolution > 0 ? resolution : default_sup_resolution(g.dim()));
}

std::vector<double> all_suprema(const Instance& instance, const Arena& arena, int resolution) {
  std::vector<double> out(arena.size());
  for (std::size_t i = 0; i < arena.size(); ++i) {
    out[i] = cell_supremum(instance, arena, i, resolution).value;
  }
  return out;
}

double opt_benchmark(std::span<const double> suprema, std::size_t n_players) {
  if (n_players > suprema.size()) {
    throw ConfigError("benchmark needs at least N cells: K=" + std::to_string(suprema.size()) +
                      ", N=" + std::to_string(n_players));
  }
  std::vector<double> s(suprema.begin(), suprema.end());
  std::partial_sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_players), s.end(),
                    std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i < n_players; ++i) total += s[i];
  return total;
}

double opt_benchmark(const Instance& instance, const Arena& arena, std::size_t n_players) {
  const auto s = all_suprema(instance, arena);
  return opt_benchmark(s, n_players);
}

}  // namespace lipmab
