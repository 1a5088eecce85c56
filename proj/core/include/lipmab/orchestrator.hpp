#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lipmab/config.hpp"
#include "lipmab/env.hpp"
#include "lipmab/geometry.hpp"
#include "lipmab/instance.hpp"
#include "lipmab/ledger.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/phase2.hpp"
#include "lipmab/plan.hpp"

namespace lipmab {

// Arena, instance and collision model described by a config.
struct World {
  Arena arena;
  Instance instance;
  CollisionModel collisions;
  // Region a seated player explores. For safe balls this is the core of
  // radius min(sigma, rho), so that any newcomer probing the center collides.
  std::vector<Region> seat_regions;
};

World build_world(const ProtocolConfig& config);

struct Phase1Record {
  int epoch = 0;
  std::uint64_t end_round = 0;
  std::vector<std::vector<std::uint64_t>> counts;  // per player, per cell
  std::vector<std::vector<double>> means;          // per player, per cell (center rewards)
  std::vector<Bracket> brackets;
  std::vector<std::vector<std::size_t>> active;
  bool valid = true;      // every bracket contains the cell supremum
  bool counts_ok = true;  // every count within [T0 p/2, 3 T0 p/2]
  bool means_ok = true;   // every center mean within its radius
};

struct SelectionRecord {
  int epoch = 0;
  std::uint64_t round = 0;
  double epsilon = 0.0;
  double epsilon_int = 0.0;
  Phase2Params params;
  std::vector<double> dither_offsets;
  std::vector<std::vector<std::size_t>> active;
  std::vector<Bracket> refined;
  std::vector<std::vector<std::size_t>> selected;
  std::vector<std::uint8_t> reseated;
  std::vector<std::uint64_t> successes;  // per player, summed over tracked probes
  std::vector<std::size_t> probes;       // per player, tracked probe count
  std::uint64_t min_count = 0;
  double max_width = 0.0;
  bool coverage = true;
  bool accuracy = true;
  bool brackets_valid = true;
  bool consensus = true;
  bool eps_optimal = true;
};

struct SeatingRecord {
  int epoch = 0;
  std::uint64_t start_round = 0;
  std::optional<std::uint64_t> t_mc;  // rounds until everyone was seated
  std::vector<std::optional<std::size_t>> assignment;
  std::vector<std::size_t> unseated_trace;
  bool distinct = true;
};

struct CurvePoint {
  std::uint64_t rounds = 0;
  double regret = 0.0;
};

struct Phase3Record {
  std::optional<std::size_t> cell;
  int epochs = 0;
  std::optional<Point> best_point;
  double best_mean = 0.0;
  std::vector<CurvePoint> curve;  // in-cell pseudo regret at learner epoch ends
};

struct RunFlags {
  bool phase1_valid = true;
  bool phase1_counts = true;
  bool phase1_means = true;
  bool phase2_coverage = true;
  bool phase2_accuracy = true;
  bool phase2_brackets = true;
  bool consensus = true;
  bool eps_optimal = true;

  // Intersection of the phase success events.
  bool clean() const noexcept {
    return phase1_counts && phase1_means && phase2_coverage && phase2_accuracy;
  }
};

struct RunCounters {
  std::array<std::uint64_t, kStages> collisions_by_stage{};
  std::uint64_t post_seating_collisions = 0;
  std::uint64_t inter_ball_collisions = 0;
  std::uint64_t clamp_count = 0;
};

struct Checkpoint {
  std::uint64_t phase3_rounds = 0;
  std::uint64_t round = 0;
  double regret = 0.0;         // realized, Phase III rounds only
  double pseudo_regret = 0.0;  // pseudo, Phase III rounds only
};

struct RunResult {
  Plan plan;
  InstanceSpec instance;
  std::vector<Point> hidden;
  std::vector<double> suprema;
  double opt = 0.0;
  RegretLedger ledger;
  std::vector<Phase1Record> phase1;
  std::vector<SelectionRecord> selections;
  std::vector<SeatingRecord> seating;
  std::vector<Phase3Record> phase3;
  std::vector<Checkpoint> checkpoints;
  RunFlags flags;
  RunCounters counters;

  // First selection's seating time, if it completed.
  std::optional<std::uint64_t> first_t_mc() const;
};

enum class StopAfter { Never, Phase1, Selection };

struct RunOptions {
  TraceSink* sink = nullptr;
  // End the run early, after the first Phase I or the first selection. The
  // ledger then covers only the simulated rounds.
  StopAfter stop_after = StopAfter::Never;
  // Snapshot Phase III regret after this many Phase III rounds (ascending).
  std::vector<std::uint64_t> phase3_checkpoints;
  // With one player and uniform sampling, Phase II has no collisions, so
  // its final statistics are multinomial visit counts with binomial reward
  // sums. When set, such segments are drawn in bulk instead of round by
  // round (same distribution, different random stream). Not allowed with
  // a sink.
  bool aggregate_solo_phase2 = false;
};

RunResult run_protocol(const ProtocolConfig& config, const RunOptions& options = {});

}  // namespace lipmab
