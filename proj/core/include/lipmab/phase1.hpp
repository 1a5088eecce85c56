#pragma once

#include <cstdint>
#include <vector>

#include "lipmab/env.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

// Probability that a given player is alone in a given cell when all N
// players pick cells uniformly: (1/K)(1 - 1/K)^(N-1).
double success_probability(std::size_t k_cells, std::size_t n_players);

struct Phase1Budget {
  std::uint64_t t0 = 0;
  double beta0 = 0.0;
};

double phase1_beta(std::size_t k_cells, std::size_t n_players, std::uint64_t t0, double delta);

// Smallest T0 with T0 >= (beta0(T0)/p_K) max(1/alpha^2, 12).
Phase1Budget phase1_budget(std::size_t k_cells, std::size_t n_players, double delta,
                           double alpha = 1.0);

// Per-cell lower/upper bounds on the cell supremum.
struct Bracket {
  std::vector<std::size_t> cells;
  std::vector<double> lcb;
  std::vector<double> ucb;

  std::size_t size() const noexcept { return cells.size(); }
};

class Phase1State {
 public:
  Phase1State() = default;
  Phase1State(std::size_t k_cells, Phase1Budget budget);

  std::size_t choose(Rng& rng) const;
  void update(std::size_t cell, const PlayerOutcome& outcome);

  bool done() const noexcept { return t_ >= budget_.t0; }
  std::uint64_t round() const noexcept { return t_; }
  const Phase1Budget& budget() const noexcept { return budget_; }
  std::size_t cells() const noexcept { return counts_.size(); }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  const std::vector<double>& sums() const noexcept { return sums_; }
  double mean(std::size_t cell) const;
  double radius(std::size_t cell) const;

 private:
  Phase1Budget budget_;
  std::uint64_t t_ = 0;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sums_;
};

// slack is the center-to-supremum allowance: L h sqrt(d) / 2 for cells,
// L sigma for safe balls.
Bracket phase1_brackets(const Phase1State& state, double slack);
Bracket phase1_brackets(const Phase1State& state, double lipschitz, double h, int d);

}  // namespace lipmab
