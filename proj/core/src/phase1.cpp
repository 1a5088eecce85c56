#include "lipmab/phase1.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

double success_probability(std::size_t k_cells, std::size_t n_players) {
  if (k_cells < 1 || n_players < 1) throw DomainError("success_probability needs K, N >= 1");
  const double k = static_cast<double>(k_cells);
  return (1.0 / k) * std::pow(1.0 - 1.0 / k, static_cast<double>(n_players - 1));
}

double phase1_beta(std::size_t k_cells, std::size_t n_players, std::uint64_t t0, double delta) {
  return std::log(4.0 * static_cast<double>(n_players) * static_cast<double>(k_cells) *
                  (static_cast<double>(t0) + 1.0) / delta);
}

Phase1Budget phase1_budget(std::size_t k_cells, std::size_t n_players, double delta, double alpha) {
  if (!(delta > 0.0 && delta < 0.25)) throw DomainError("phase I failure budget must lie in (0, 1/4)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("phase I accuracy alpha must lie in (0, 1]");
  const double p = success_probability(k_cells, n_players);
  if (!(p > 0.0)) throw ConfigError("phase I success probability is zero (K = 1 with N > 1)");
  const double factor = std::max(1.0 / (alpha * alpha), 12.0) / p;
  std::uint64_t t = 1;
  for (int it = 0; it < 100; ++it) {
    const double need = phase1_beta(k_cells, n_players, t, delta) * factor;
    const auto next = static_cast<std::uint64_t>(std::ceil(need));
    if (next <= t) return Phase1Budget{t, phase1_beta(k_cells, n_players, t, delta)};
    t = next;
  }
  throw InternalError("phase I budget iteration did not converge");
}

Phase1State::Phase1State(std::size_t k_cells, Phase1Budget budget)
    : budget_(budget), counts_(k_cells, 0), sums_(k_cells, 0.0) {
  if (k_cells == 0) throw DomainError("phase I needs at least one cell");
}

std::size_t Phase1State::choose(Rng& rng) const {
  if (done()) throw PhaseError("phase I already complete");
  return static_cast<std::size_t>(rng.index(counts_.size()));
}

void Phase1State::update(std::size_t cell, const PlayerOutcome& outcome) {
  if (done()) throw PhaseError("phase I update after T0");
  if (cell >= counts_.size()) throw DomainError("phase I cell out of range");
  if (!outcome.collided) {
    ++counts_[cell];
    sums_[cell] += outcome.reward;
  }
  ++t_;
}

double Phase1State::mean(std::size_t cell) const {
  const auto o = counts_.at(cell);
  return o == 0 ? 0.0 : sums_[cell] / static_cast<double>(o);
}

double Phase1State::radius(std::size_t cell) const {
  const auto o = std::max<std::uint64_t>(1, counts_.at(cell));
  return std::sqrt(budget_.beta0 / (2.0 * static_cast<double>(o)));
}

Bracket phase1_brackets(const Phase1State& state, double slack) {
  Bracket b;
  const std::size_t k = state.cells();
  b.cells.resize(k);
  b.lcb.resize(k);
  b.ucb.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double m = state.mean(c);
    const double r = state.radius(c);
    b.cells[c] = c;
    b.lcb[c] = m - r;
    b.ucb[c] = m + r + slack;
  }
  return b;
}

Bracket phase1_brackets(const Phase1State& state, double lipschitz, double h, int d) {
  return phase1_brackets(state, lipschitz * h * std::sqrt(static_cast<double>(d)) / 2.0);
}

}  // namespace lipmab
