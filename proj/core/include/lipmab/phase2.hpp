#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lipmab/env.hpp"
#include "lipmab/geometry.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

struct ActiveSet {
  std::vector<std::size_t> cells;
  bool undersized = false;
};

// theta = N-th largest LCB; keep every cell whose UCB reaches theta.
ActiveSet active_set(const Bracket& brackets, std::size_t n_players);

struct ProbeNet {
  std::size_t cell = 0;
  std::vector<Point> points;
  GridCounts counts{};
  double spacing = 0.0;  // requested per-axis spacing eta / sqrt(d)

  std::size_t size() const noexcept { return points.size(); }
};

// Centered grid with per-axis spacing at most eta/sqrt(d), so every point
// of the cell is within eta/2 of a probe. With triadic = true the per-axis
// counts are rounded up to powers of 3, which makes successive nets nested.
ProbeNet build_net(const Arena& arena, std::size_t cell, double eta, bool triadic = false);
ProbeNet build_net(const PartitionGeometry& g, std::size_t cell, double eta);

double net_covering_radius(const Region& region, const GridCounts& counts);
double net_size_bound(double h, int d, double eta);

struct Phase2Params {
  double epsilon = 0.0;
  double lipschitz = 0.0;
  double eta = 0.0;
  double beta1 = 0.0;
  double r1 = 0.0;
  double q = 0.0;
  std::uint64_t b = 0;
  std::uint64_t t1 = 0;
  std::size_t n_probe = 0;
  std::size_t m_act = 0;
  std::size_t p_max = 0;
  std::size_t n_players = 0;
  // 0 for uniform sampling; otherwise the slot count of the stratified
  // schedule, and t1 = b * slots * p_max.
  std::size_t stratified_slots = 0;

  std::uint64_t rounds_for(std::uint64_t b_needed) const;
};

// extra_log is added to beta1 (log of the epoch count when data is reused).
Phase2Params phase2_params(double epsilon, double lipschitz, double delta, std::size_t n_probe,
                           std::size_t m_act, std::size_t p_max, std::size_t n_players,
                           double extra_log = 0.0);

Phase2Params with_stratified(Phase2Params p, std::size_t slots);

struct DitherTable {
  std::vector<double> offsets;
  double eta_dit = 0.0;
  double min_gap = 0.0;

  bool empty() const noexcept { return offsets.empty(); }
};

// xi(C_m) = (m-1)/(K-1) * 3 eps_main / 4 in public cell order. K = 1 gives
// an empty table.
DitherTable dither_table(std::size_t k_cells, double eps_main);

// Raise b until 4 r1 <= gap; recomputes r1 and t1.
Phase2Params dither_gap_enforce(Phase2Params p, double gap);

struct Selection {
  std::vector<std::size_t> cells;  // sorted by cell index
  bool shortfall = false;
};

// Top N by LCB + xi(cell), ties to the smaller cell index.
Selection select_top_n(const Bracket& refined, const DitherTable* dither, std::size_t n_players);

// N-th largest supremum exceeds the (N+1)-th by more than 2 eps.
bool eps_unique(std::span<const double> suprema, std::size_t n_players, double epsilon);

// Public round-robin: player j at round t takes slot (t + j) mod S with
// S = max(M, N); slots >= M are idle. Visits to a cell cycle its probes.
class StratifiedSchedule {
 public:
  struct Assignment {
    std::size_t slot;
    std::size_t probe;
  };

  StratifiedSchedule() = default;
  StratifiedSchedule(std::vector<std::size_t> probes_per_cell, std::size_t n_players);

  std::optional<Assignment> assign(std::size_t player, std::uint64_t round) const;
  std::size_t slots() const noexcept { return slots_; }
  std::size_t cells() const noexcept { return probes_.size(); }
  std::uint64_t block_length() const noexcept;

 private:
  std::vector<std::size_t> probes_;
  std::size_t n_players_ = 0;
  std::size_t slots_ = 0;
  std::size_t p_max_ = 0;
};

class Phase2State {
 public:
  struct Choice {
    std::size_t slot = 0;
    std::size_t probe = 0;
  };

  Phase2State() = default;
  // nets[slot] is the net of the slot-th tracked cell.
  Phase2State(std::vector<ProbeNet> nets, Phase2Params params);

  Choice choose_uniform(Rng& rng) const;
  Choice choose_stratified(const StratifiedSchedule& schedule, std::size_t player,
                           std::uint64_t schedule_round) const;
  void update(const Choice& c, const PlayerOutcome& outcome);
  // Aggregated statistics for rounds simulated in bulk; advance() moves
  // the clock separately.
  void absorb(const Choice& c, std::uint64_t successes, double reward_sum);
  void advance(std::uint64_t rounds);

  // Swap in finer nested nets, carrying each old probe's statistics to the
  // coinciding new probe. Per-axis counts must be multiples of the old ones
  // by an odd factor.
  void refine(std::vector<ProbeNet> nets);
  void set_params(const Phase2Params& p) { params_ = p; }
  void set_budget(std::uint64_t rounds) noexcept { budget_ = rounds; }

  const Point& point(const Choice& c) const { return nets_[c.slot].points[c.probe]; }
  const Phase2Params& params() const noexcept { return params_; }
  const std::vector<ProbeNet>& nets() const noexcept { return nets_; }
  std::uint64_t round() const noexcept { return t_; }
  std::uint64_t budget() const noexcept { return budget_; }
  std::size_t slot_of(std::size_t cell) const;

  std::uint64_t count(std::size_t slot, std::size_t probe) const {
    return counts_[offsets_[slot] + probe];
  }
  double sum(std::size_t slot, std::size_t probe) const { return sums_[offsets_[slot] + probe]; }
  double mean(std::size_t slot, std::size_t probe) const;
  double radius(std::size_t slot, std::size_t probe) const;
  std::uint64_t min_count() const;

 private:
  void layout();

  std::vector<ProbeNet> nets_;
  Phase2Params params_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sums_;
  std::uint64_t t_ = 0;
  std::uint64_t budget_ = 0;
};

// Refined bracket per listed cell:
//   LCB = max_z (mean - r), UCB = max_z (mean + r) + L eta.
// r = r1 for probes with at least b successes, else sqrt(beta1 / (2 n)).
Bracket refined_brackets(const Phase2State& state, std::span<const std::size_t> cells);

}  // namespace lipmab
