#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lipmab/rng.hpp"

namespace lipmab {

// Expected number of players seated in one round when u of N are unseated:
// (u^2/N)(1 - 1/N)^(u-1).
double drift(std::size_t u, std::size_t n_players);

struct TimeBound {
  double sum_inverse_drift = 0.0;  // sum over u of 1/drift(u, N)
  double linear = 0.0;             // e pi^2 / 6 * N
};

TimeBound expected_time_bound(std::size_t n_players);

// e N (1 + ln N): bound on the expected total unseated player-rounds.
double unseated_mass_bound(std::size_t n_players);

class SeatingState {
 public:
  struct RoundResult {
    std::vector<std::optional<std::size_t>> choice;  // target index, unseated players only
    std::vector<std::uint8_t> collided;
    std::size_t newly_seated = 0;
  };

  explicit SeatingState(std::vector<std::size_t> targets);
  // Starts with some players already seated; seats[j] indexes targets.
  SeatingState(std::vector<std::size_t> targets, std::vector<std::optional<std::size_t>> seats);

  // rngs[j] is player j's private stream; only unseated players draw.
  RoundResult mc_round(std::span<Rng> rngs);

  std::size_t players() const noexcept { return seat_.size(); }
  std::size_t unseated() const noexcept { return unseated_; }
  std::uint64_t round() const noexcept { return t_; }
  const std::vector<std::size_t>& targets() const noexcept { return targets_; }
  // Seated cell of player j, if any.
  std::optional<std::size_t> seat(std::size_t j) const;

 private:
  std::vector<std::size_t> targets_;
  std::vector<std::optional<std::size_t>> seat_;  // index into targets_
  std::vector<std::uint8_t> occupied_;
  std::size_t unseated_ = 0;
  std::uint64_t t_ = 0;
};

struct SeatingRun {
  std::uint64_t t_mc = 0;
  std::vector<std::size_t> unseated_trace;  // U_t at the start of each round
  std::vector<std::size_t> assignment;      // player -> cell
};

SeatingRun run_until_seated(const std::vector<std::size_t>& targets, std::uint64_t seed,
                            std::uint64_t round_cap = 1'000'000);

}  // namespace lipmab
