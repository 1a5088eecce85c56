#include "lipmab/phase2.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

ActiveSet active_set(const Bracket& brackets, std::size_t n_players) {
  const std::size_t k = brackets.size();
  if (n_players == 0 || n_players > k) {
    throw DomainError("active set needs 1 <= N <= K (N=" + std::to_string(n_players) +
                      ", K=" + std::to_string(k) + ")");
  }
  std::vector<double> l = brackets.lcb;
  std::nth_element(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(n_players - 1), l.end(),
                   std::greater<>());
  const double theta = l[n_players - 1];
  ActiveSet out;
  for (std::size_t i = 0; i < k; ++i) {
    if (brackets.ucb[i] >= theta) out.cells.push_back(brackets.cells[i]);
  }
  out.undersized = out.cells.size() < n_players;
  return out;
}

namespace {

int next_power_of_3(int n) {
  int p = 1;
  while (p < n) p *= 3;
  return p;
}

}  // namespace

ProbeNet build_net(const Arena& arena, std::size_t cell, double eta, bool triadic) {
  if (!(eta > 0.0)) throw DomainError("net spacing eta must be positive");
  const Region& region = arena.region(cell);
  const double s = eta / std::sqrt(static_cast<double>(arena.dim()));
  ProbeNet net;
  net.cell = cell;
  net.spacing = s;
  net.counts = counts_for_spacing(region, s);
  if (triadic) {
    for (int k = 0; k < arena.dim(); ++k) {
      auto& c = net.counts[static_cast<std::size_t>(k)];
      c = next_power_of_3(c);
    }
  }
  net.points = centered_grid(region, net.counts);
  return net;
}

ProbeNet build_net(const PartitionGeometry& g, std::size_t cell, double eta) {
  return build_net(Arena::from_partition(g), cell, eta);
}

double net_covering_radius(const Region& region, const GridCounts& counts) {
  double r2 = 0.0;
  for (int k = 0; k < region.bounds.lo.dim(); ++k) {
    const double step = (region.bounds.hi[k] - region.bounds.lo[k]) / counts[static_cast<std::size_t>(k)];
    r2 += 0.25 * step * step;
  }
  return std::sqrt(r2);
}

double net_size_bound(double h, int d, double eta) {
  return std::pow(2.0 + h * std::sqrt(static_cast<double>(d)) / eta, d);
}

std::uint64_t Phase2Params::rounds_for(std::uint64_t b_needed) const {
  // Saturate: epochic plans at large T ask for more rounds than fit in 64 bits.
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
  double r = 0.0;
  if (stratified_slots > 0) {
    r = static_cast<double>(b_needed) * static_cast<double>(stratified_slots) * static_cast<double>(p_max);
    if (r < 0x1p63) return b_needed * static_cast<std::uint64_t>(stratified_slots) * static_cast<std::uint64_t>(p_max);
    return cap;
  }
  r = std::ceil(2.0 * static_cast<double>(b_needed) / q);
  return r < 0x1p63 ? static_cast<std::uint64_t>(r) : cap;
}

Phase2Params phase2_params(double epsilon, double lipschitz, double delta, std::size_t n_probe,
                           std::size_t m_act, std::size_t p_max, std::size_t n_players,
                           double extra_log) {
  if (!(epsilon > 0.0)) throw DomainError("phase II target epsilon must be positive");
  if (!(lipschitz > 0.0)) throw DomainError("Lipschitz constant must be positive");
  if (!(delta > 0.0 && delta < 0.25)) throw DomainError("phase II failure budget must lie in (0, 1/4)");
  if (n_probe == 0 || m_act == 0 || p_max == 0 || n_players == 0) {
    throw DomainError("phase II sizes must be positive");
  }
  Phase2Params p;
  p.epsilon = epsilon;
  p.lipschitz = lipschitz;
  p.eta = epsilon / (2.0 * lipschitz);
  p.n_probe = n_probe;
  p.m_act = m_act;
  p.p_max = p_max;
  p.n_players = n_players;
  const double np = static_cast<double>(n_probe);
  p.beta1 = std::log(4.0 * np / delta) + extra_log;
  const double need = std::max(4.0 * std::log(2.0 * np / delta), 8.0 * p.beta1 / (epsilon * epsilon));
  p.b = static_cast<std::uint64_t>(std::ceil(need));
  p.r1 = std::sqrt(p.beta1 / (2.0 * static_cast<double>(p.b)));
  // Guard the ceiling against round-off at the boundary.
  while (2.0 * p.r1 + lipschitz * p.eta > epsilon) {
    ++p.b;
    p.r1 = std::sqrt(p.beta1 / (2.0 * static_cast<double>(p.b)));
  }
  const double nn = static_cast<double>(n_players);
  p.q = (1.0 / (static_cast<double>(m_act) * static_cast<double>(p_max))) * std::pow(1.0 - 1.0 / nn, nn - 1.0);
  p.t1 = p.rounds_for(p.b);
  return p;
}

Phase2Params with_stratified(Phase2Params p, std::size_t slots) {
  if (slots == 0) throw DomainError("stratified schedule needs at least one slot");
  p.stratified_slots = slots;
  p.t1 = p.rounds_for(p.b);
  return p;
}

DitherTable dither_table(std::size_t k_cells, double eps_main) {
  DitherTable t;
  if (k_cells < 2) return t;
  if (!(eps_main > 0.0)) throw DomainError("dither needs a positive epsilon");
  t.eta_dit = 3.0 * eps_main / 4.0;
  const double km1 = static_cast<double>(k_cells - 1);
  t.min_gap = t.eta_dit / km1;
  t.offsets.resize(k_cells);
  for (std::size_t m = 0; m < k_cells; ++m) t.offsets[m] = static_cast<double>(m) / km1 * t.eta_dit;
  return t;
}

Phase2Params dither_gap_enforce(Phase2Params p, double gap) {
  if (!(gap > 0.0)) throw DomainError("dither gap must be positive");
  if (4.0 * p.r1 <= gap) return p;
  auto b = static_cast<std::uint64_t>(std::ceil(8.0 * p.beta1 / (gap * gap)));
  b = std::max(b, p.b);
  while (4.0 * std::sqrt(p.beta1 / (2.0 * static_cast<double>(b))) > gap) ++b;
  p.b = b;
  p.r1 = std::sqrt(p.beta1 / (2.0 * static_cast<double>(b)));
  p.t1 = p.rounds_for(b);
  return p;
}

Selection select_top_n(const Bracket& refined, const DitherTable* dither, std::size_t n_players) {
  Selection out;
  const std::size_t k = refined.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  auto score = [&](std::size_t i) {
    double s = refined.lcb[i];
    if (dither != nullptr && !dither->empty()) s += dither->offsets.at(refined.cells[i]);
    return s;
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = score(a);
    const double sb = score(b);
    if (sa != sb) return sa > sb;
    return refined.cells[a] < refined.cells[b];
  });
  const std::size_t take = std::min(k, n_players);
  for (std::size_t i = 0; i < take; ++i) out.cells.push_back(refined.cells[order[i]]);
  std::sort(out.cells.begin(), out.cells.end());
  out.shortfall = take < n_players;
  return out;
}

bool eps_unique(std::span<const double> suprema, std::size_t n_players, double epsilon) {
  if (n_players == 0 || n_players > suprema.size()) throw DomainError("eps_unique needs 1 <= N <= K");
  if (n_players == suprema.size()) return true;
  std::vector<double> s(suprema.begin(), suprema.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  return s[n_players - 1] - s[n_players] > 2.0 * epsilon;
}

StratifiedSchedule::StratifiedSchedule(std::vector<std::size_t> probes_per_cell, std::size_t n_players)
    : probes_(std::move(probes_per_cell)), n_players_(n_players) {
  if (probes_.empty() || n_players == 0) throw DomainError("stratified schedule needs cells and players");
  for (std::size_t p : probes_) {
    if (p == 0) throw DomainError("stratified schedule: empty net");
  }
  slots_ = std::max(probes_.size(), n_players_);
  p_max_ = *std::max_element(probes_.begin(), probes_.end());
}

std::optional<StratifiedSchedule::Assignment> StratifiedSchedule::assign(std::size_t player,
                                                                         std::uint64_t round) const {
  if (player >= n_players_) throw DomainError("stratified schedule: player out of range");
  const std::uint64_t u = round + player;
  const auto slot = static_cast<std::size_t>(u % slots_);
  if (slot >= probes_.size()) return std::nullopt;
  const std::uint64_t visit = u / slots_;
  return Assignment{slot, static_cast<std::size_t>(visit % probes_[slot])};
}

std::uint64_t StratifiedSchedule::block_length() const noexcept {
  return static_cast<std::uint64_t>(slots_) * static_cast<std::uint64_t>(p_max_);
}

Phase2State::Phase2State(std::vector<ProbeNet> nets, Phase2Params params)
    : nets_(std::move(nets)), params_(params), budget_(params.t1) {
  if (nets_.empty()) throw DomainError("phase II needs at least one tracked cell");
  layout();
  counts_.assign(offsets_.back(), 0);
  sums_.assign(offsets_.back(), 0.0);
}

void Phase2State::layout() {
  offsets_.assign(nets_.size() + 1, 0);
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    if (nets_[i].points.empty()) throw DomainError("phase II net is empty");
    offsets_[i + 1] = offsets_[i] + nets_[i].size();
  }
}

std::size_t Phase2State::slot_of(std::size_t cell) const {
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    if (nets_[i].cell == cell) return i;
  }
  throw DomainError("cell " + std::to_string(cell) + " is not tracked in phase II");
}

Phase2State::Choice Phase2State::choose_uniform(Rng& rng) const {
  if (t_ >= budget_) throw PhaseError("phase II budget exhausted");
  const auto slot = static_cast<std::size_t>(rng.index(nets_.size()));
  const auto probe = static_cast<std::size_t>(rng.index(nets_[slot].size()));
  return Choice{slot, probe};
}

Phase2State::Choice Phase2State::choose_stratified(const StratifiedSchedule& schedule,
                                                   std::size_t player,
                                                   std::uint64_t schedule_round) const {
  if (t_ >= budget_) throw PhaseError("phase II budget exhausted");
  const auto a = schedule.assign(player, schedule_round);
  if (!a) throw PhaseError("stratified schedule left the player idle (fewer cells than players)");
  if (a->slot >= nets_.size()) throw PhaseError("stratified schedule does not match the tracked cells");
  return Choice{a->slot, a->probe % nets_[a->slot].size()};
}

void Phase2State::update(const Choice& c, const PlayerOutcome& outcome) {
  if (t_ >= budget_) throw PhaseError("phase II update after its budget");
  if (c.slot >= nets_.size() || c.probe >= nets_[c.slot].size()) {
    throw DomainError("phase II probe out of range");
  }
  if (!outcome.collided) {
    const std::size_t i = offsets_[c.slot] + c.probe;
    ++counts_[i];
    sums_[i] += outcome.reward;
  }
  ++t_;
}

void Phase2State::absorb(const Choice& c, std::uint64_t successes, double reward_sum) {
  if (c.slot >= nets_.size() || c.probe >= nets_[c.slot].size()) {
    throw DomainError("phase II probe out of range");
  }
  const std::size_t i = offsets_[c.slot] + c.probe;
  counts_[i] += successes;
  sums_[i] += reward_sum;
}

void Phase2State::advance(std::uint64_t rounds) {
  if (rounds > budget_ - std::min(budget_, t_)) throw PhaseError("phase II advance past its budget");
  t_ += rounds;
}

void Phase2State::refine(std::vector<ProbeNet> nets) {
  if (nets.size() != nets_.size()) throw DomainError("refine: tracked cells changed");
  std::vector<std::size_t> old_offsets = offsets_;
  std::vector<std::uint64_t> old_counts = std::move(counts_);
  std::vector<double> old_sums = std::move(sums_);
  std::vector<ProbeNet> old_nets = std::move(nets_);
  nets_ = std::move(nets);
  layout();
  counts_.assign(offsets_.back(), 0);
  sums_.assign(offsets_.back(), 0.0);
  for (std::size_t s = 0; s < nets_.size(); ++s) {
    const ProbeNet& on = old_nets[s];
    ProbeNet& nn = nets_[s];
    if (on.cell != nn.cell) throw DomainError("refine: tracked cells changed");
    const int d = on.points.empty() ? 0 : on.points.front().dim();
    std::array<std::size_t, kMaxDim> factor{};
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (nn.counts[kk] % on.counts[kk] != 0 || (nn.counts[kk] / on.counts[kk]) % 2 == 0) {
        throw DomainError("refine: nets are not nested");
      }
      factor[kk] = static_cast<std::size_t>(nn.counts[kk] / on.counts[kk]);
    }
    std::array<std::size_t, kMaxDim> idx{};
    for (std::size_t i = 0; i < on.size(); ++i) {
      std::size_t j = 0;
      std::size_t stride = 1;
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        j += (factor[kk] * idx[kk] + (factor[kk] - 1) / 2) * stride;
        stride *= static_cast<std::size_t>(nn.counts[kk]);
      }
      nn.points[j] = on.points[i];
      counts_[offsets_[s] + j] = old_counts[old_offsets[s] + i];
      sums_[offsets_[s] + j] = old_sums[old_offsets[s] + i];
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (++idx[kk] < static_cast<std::size_t>(on.counts[kk])) break;
        idx[kk] = 0;
      }
    }
  }
}

double Phase2State::mean(std::size_t slot, std::size_t probe) const {
  const auto n = count(slot, probe);
  return n == 0 ? 0.0 : sum(slot, probe) / static_cast<double>(n);
}

double Phase2State::radius(std::size_t slot, std::size_t probe) const {
  const auto n = count(slot, probe);
  if (n >= params_.b) return params_.r1;
  return std::sqrt(params_.beta1 / (2.0 * static_cast<double>(std::max<std::uint64_t>(1, n))));
}

std::uint64_t Phase2State::min_count() const {
  return counts_.empty() ? 0 : *std::min_element(counts_.begin(), counts_.end());
}

Bracket refined_brackets(const Phase2State& state, std::span<const std::size_t> cells) {
  Bracket b;
  const double slack = state.params().lipschitz * state.params().eta;
  for (std::size_t cell : cells) {
    const std::size_t s = state.slot_of(cell);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < state.nets()[s].size(); ++z) {
      const double m = state.mean(s, z);
      const double r = state.radius(s, z);
      lo = std::max(lo, m - r);
      hi = std::max(hi, m + r);
    }
    b.cells.push_back(cell);
    b.lcb.push_back(lo);
    b.ucb.push_back(hi + slack);
  }
  return b;
}

}  // namespace lipmab
