#include "lipmab/seating.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

double drift(std::size_t u, std::size_t n_players) {
  if (n_players == 0 || u == 0 || u > n_players) {
    throw DomainError("drift needs 1 <= u <= N (u=" + std::to_string(u) + ", N=" +
                      std::to_string(n_players) + ")");
  }
  const double n = static_cast<double>(n_players);
  const double uu = static_cast<double>(u);
  return uu * uu / n * std::pow(1.0 - 1.0 / n, uu - 1.0);
}

TimeBound expected_time_bound(std::size_t n_players) {
  if (n_players == 0) throw DomainError("expected_time_bound needs N >= 1");
  TimeBound b;
  for (std::size_t u = 1; u <= n_players; ++u) b.sum_inverse_drift += 1.0 / drift(u, n_players);
  b.linear = std::numbers::e * std::numbers::pi * std::numbers::pi / 6.0 * static_cast<double>(n_players);
  return b;
}

double unseated_mass_bound(std::size_t n_players) {
  const double n = static_cast<double>(n_players);
  return std::numbers::e * n * (1.0 + std::log(n));
}

SeatingState::SeatingState(std::vector<std::size_t> targets)
    : targets_(std::move(targets)), seat_(targets_.size()), occupied_(targets_.size(), 0),
      unseated_(targets_.size()) {
  if (targets_.empty()) throw DomainError("seating needs at least one target");
  std::set<std::size_t> s(targets_.begin(), targets_.end());
  if (s.size() != targets_.size()) throw DomainError("seating targets must be distinct");
}

SeatingState::SeatingState(std::vector<std::size_t> targets,
                           std::vector<std::optional<std::size_t>> seats)
    : SeatingState(std::move(targets)) {
  if (seats.size() != seat_.size()) throw DomainError("one initial seat entry per player");
  for (std::size_t j = 0; j < seats.size(); ++j) {
    if (!seats[j]) continue;
    const std::size_t c = *seats[j];
    if (c >= targets_.size() || occupied_[c]) throw DomainError("initial seats must be distinct targets");
    seat_[j] = c;
    occupied_[c] = 1;
    --unseated_;
  }
}

std::optional<std::size_t> SeatingState::seat(std::size_t j) const {
  const auto& s = seat_.at(j);
  if (!s) return std::nullopt;
  return targets_[*s];
}

SeatingState::RoundResult SeatingState::mc_round(std::span<Rng> rngs) {
  const std::size_t n = seat_.size();
  if (rngs.size() != n) throw DomainError("mc_round needs one stream per player");
  if (unseated_ == 0) throw PhaseError("mc_round with everyone seated");
  RoundResult r;
  r.choice.assign(n, std::nullopt);
  r.collided.assign(n, 0);
  std::vector<std::uint32_t> hits(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (seat_[j]) continue;
    const auto c = static_cast<std::size_t>(rngs[j].index(n));
    r.choice[j] = c;
    ++hits[c];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (r.choice[j]) {
      const std::size_t c = *r.choice[j];
      if (hits[c] == 1 && occupied_[c] == 0) {
        seat_[j] = c;
        ++r.newly_seated;
      } else {
        r.collided[j] = 1;
      }
    } else if (hits[*seat_[j]] > 0) {
      r.collided[j] = 1;  // an unseated player landed on this seat
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (r.choice[j] && seat_[j]) occupied_[*seat_[j]] = 1;
  }
  unseated_ -= r.newly_seated;
  ++t_;
  return r;
}

SeatingRun run_until_seated(const std::vector<std::size_t>& targets, std::uint64_t seed,
                            std::uint64_t round_cap) {
  SeatingState state(targets);
  std::vector<Rng> rngs;
  rngs.reserve(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) rngs.emplace_back(derive_seed(seed, "player.seating", j));
  SeatingRun run;
  while (state.unseated() > 0) {
    if (state.round() >= round_cap) {
      throw InternalError("musical chairs exceeded " + std::to_string(round_cap) + " rounds");
    }
    run.unseated_trace.push_back(state.unseated());
    state.mc_round(rngs);
  }
  run.t_mc = state.round();
  run.assignment.resize(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) run.assignment[j] = *state.seat(j);
  return run;
}

}  // namespace lipmab
