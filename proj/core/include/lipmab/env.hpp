#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lipmab/geometry.hpp"
#include "lipmab/instance.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

enum class CollisionKind { Partition, DistanceThreshold };

struct CollisionModel {
  CollisionKind kind = CollisionKind::Partition;
  double rho = 0.0;

  static CollisionModel partition() { return {}; }
  static CollisionModel distance_threshold(double rho);
};

// Reward observation of one player: collided means the null symbol.
struct PlayerOutcome {
  bool collided = false;
  double reward = 0.0;
};

// Marks players whose action conflicts with another player's action.
// Partition needs the geometry; DistanceThreshold ignores it.
void collision_mask(const CollisionModel& model, const PartitionGeometry* geometry,
                    std::span<const Point> actions, std::vector<std::uint8_t>& collided);

// Bernoulli(mu(x)). mu is clamped to [0,1]; clamps are counted if asked.
double sample_reward(const Instance& instance, const Point& x, Rng& rng,
                     std::uint64_t* clamp_counter = nullptr);

// Convenience one-shot resolution; rewards are drawn in player order.
std::vector<PlayerOutcome> resolve_round(const CollisionModel& model,
                                         const PartitionGeometry* geometry,
                                         const Instance& instance,
                                         std::span<const Point> actions, Rng& rng);

// Round-loop environment with reusable buffers and its own reward stream.
class Environment {
 public:
  Environment(const Instance& instance, CollisionModel model,
              std::optional<PartitionGeometry> geometry, std::size_t n_players,
              std::uint64_t seed);

  void resolve(std::span<const Point> actions, std::span<PlayerOutcome> out);

  const CollisionModel& model() const noexcept { return model_; }
  std::uint64_t clamp_count() const noexcept { return clamps_; }
  // The reward stream, for bulk simulation of collision-free rounds.
  Rng& reward_stream() noexcept { return rng_; }

 private:
  const Instance* instance_;
  CollisionModel model_;
  std::optional<PartitionGeometry> geometry_;
  std::size_t n_;
  Rng rng_;
  std::uint64_t clamps_ = 0;
  std::vector<std::uint8_t> mask_;
};

struct SupremumResult {
  double value = 0.0;
  double error_bound = 0.0;  // 0 when analytic
  bool analytic = false;
};

int default_sup_resolution(int d) noexcept;

// Analytic supremum when available, else the grid maximum with the
// Lipschitz error bound L * (grid covering radius).
SupremumResult cell_supremum(const Instance& instance, const Arena& arena, std::size_t index,
                             int resolution = 0);
SupremumResult cell_supremum(const Instance& instance, const PartitionGeometry& g,
                             std::size_t index, int resolution = 0);

std::vector<double> all_suprema(const Instance& instance, const Arena& arena, int resolution = 0);

// Sum of the N largest cell suprema.
double opt_benchmark(std::span<const double> suprema, std::size_t n_players);
double opt_benchmark(const Instance& instance, const Arena& arena, std::size_t n_players);

}  // namespace lipmab
