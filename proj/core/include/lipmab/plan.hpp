#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lipmab/config.hpp"
#include "lipmab/geometry.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/phase2.hpp"

namespace lipmab {

struct FailureBudget {
  double delta_phase1 = 0.0;
  double delta_phase2 = 0.0;
};

// delta_I = delta_II = delta_sys / (2N).
FailureBudget budget_split(double delta_sys, std::size_t n_players);

// (K (L h)^d / T)^(1/(d+3)), clamped to (0, 1].
double single_shot_epsilon(std::size_t k_cells, double lipschitz, double h, int d, std::uint64_t horizon);

struct EpochSpec {
  std::uint64_t length = 0;
  double epsilon = 0.0;
};

// Lengths 1, 2, 4, ... with the last one truncated; eps_k = eps0 2^(-k/(d+2)).
std::vector<EpochSpec> epoch_schedule(std::uint64_t horizon, int d, double epsilon0);

// Validates an r-packing and returns the safe-ball arena. Violations name
// the offending pair or parameter.
Arena packing_reduce(const std::vector<Point>& centers, double r, double rho, double sigma,
                     std::size_t n_players);

// Public round plan. Every player derives the same plan from public data.
struct EpochPlan {
  int index = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  double epsilon = 0.0;       // epsilon_main of this epoch
  double epsilon_int = 0.0;   // bracket width target (epsilon/4 with dither)
  Phase2Params params;        // params.t1 = rounds required at this level
  DitherTable dither;         // empty when dither is off
  std::vector<GridCounts> net_counts;  // per cell
  int level = 0;              // net level; data carries over within a level

  // Rounds [phase1_begin, phase1_end) and [phase2_begin, phase2_end).
  std::uint64_t phase1_begin = 0, phase1_end = 0;
  std::uint64_t phase2_begin = 0, phase2_end = 0;
  bool fresh_phase1 = false;  // discard Phase I data at phase1_begin
  bool fresh_phase2 = false;  // discard Phase II data at phase2_begin
  bool refine = false;        // swap to finer nested nets at phase2_begin
  std::uint64_t level_rounds_before = 0;  // level rounds already spent
  bool selects = false;       // selection at phase2_end, exploit to end

  bool has_phase1() const noexcept { return phase1_end > phase1_begin; }
  bool has_phase2() const noexcept { return phase2_end > phase2_begin; }
};

struct Plan {
  Mode mode = Mode::SingleShot;
  Sampling sampling = Sampling::Uniform;
  bool dither = true;
  bool reuse = false;        // probe data reused across epochs
  std::size_t k_cells = 0;
  std::size_t n_players = 0;
  std::uint64_t horizon = 0;
  double lipschitz = 0.0;
  FailureBudget budget;
  Phase1Budget phase1;
  std::vector<EpochPlan> epochs;

  std::uint64_t identification_rounds() const noexcept;
  std::uint64_t phase1_rounds() const noexcept;
  std::uint64_t phase2_rounds() const noexcept;
};

Plan make_plan(const ProtocolConfig& config, const Arena& arena, double lipschitz);

}  // namespace lipmab
