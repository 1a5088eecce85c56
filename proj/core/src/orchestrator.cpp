#include "lipmab/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <string>

#include "lipmab/errors.hpp"
#include "lipmab/instances.hpp"
#include "lipmab/phase3.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

namespace {

constexpr double kTol = 1e-12;

InstanceSpec resolve_instance(const ProtocolConfig& c) {
  InstanceSpec s = c.instance;
  if (s.kind.empty()) throw ConfigError("config has no instance");
  if (s.kind != "pathology" && !s.params.count("d")) s.params["d"] = c.d;
  if (s.kind == "spike") {
    if (!s.params.count("h")) s.params["h"] = c.h;
    if (!s.params.count("N")) s.params["N"] = static_cast<double>(c.n_players);
  }
  if (!c.instance_seed_fixed) s.seed = derive_seed(c.seed, "instance", 0);
  return s;
}

// One player's protocol state. It sees only public data (plan, arena, L)
// and its own outcomes.
struct Agent {
  std::size_t id = 0;
  Rng rng1;
  Rng rng2;
  Rng rng_mc;

  Phase1State p1;
  Bracket bracket0;
  ActiveSet active;

  Phase2State p2;
  bool p2_ready = false;
  std::vector<std::size_t> tracked;

  std::vector<std::size_t> targets;
  std::optional<std::size_t> seat;
  std::optional<ZoomLearner> learner;

  Role role = Role::PhaseI;
  std::size_t cell = 0;
  Phase2State::Choice choice;
  std::size_t grid_index = 0;
};

std::vector<ProbeNet> nets_for(const Arena& arena, const std::vector<std::size_t>& cells,
                               const EpochPlan& e) {
  std::vector<ProbeNet> nets;
  nets.reserve(cells.size());
  const double s = e.params.eta / std::sqrt(static_cast<double>(arena.dim()));
  for (std::size_t c : cells) {
    ProbeNet n;
    n.cell = c;
    n.counts = e.net_counts[c];
    n.spacing = s;
    n.points = centered_grid(arena.region(c), n.counts);
    nets.push_back(std::move(n));
  }
  return nets;
}

class Runner {
 public:
  Runner(const ProtocolConfig& config, const RunOptions& options)
      : config_(config),
        options_(options),
        world_(build_world(config)),
        env_(world_.instance, world_.collisions,
             world_.arena.partition() ? std::optional<PartitionGeometry>(*world_.arena.partition())
                                      : std::nullopt,
             config.n_players, derive_seed(config.seed, "env", 0)) {
    result_.plan = make_plan(config, world_.arena, world_.instance.lipschitz());
    result_.instance = world_.instance.spec();
    result_.hidden = world_.instance.hidden();
    result_.suprema = all_suprema(world_.instance, world_.arena);
    result_.opt = opt_benchmark(result_.suprema, config.n_players);
    {
      std::vector<double> s = result_.suprema;
      std::sort(s.begin(), s.end(), std::greater<>());
      nth_best_ = s[config.n_players - 1];
    }
    const std::size_t n = config.n_players;
    agents_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      Agent& a = agents_[j];
      a.id = j;
      a.rng1 = Rng(derive_seed(config.seed, "player.phase1", j));
      a.rng2 = Rng(derive_seed(config.seed, "player.phase2", j));
      a.rng_mc = Rng(derive_seed(config.seed, "player.seating", j));
    }
    actions_.assign(n, Point(world_.arena.dim()));
    outcomes_.assign(n, PlayerOutcome{});
    roles_.assign(n, Role::PhaseI);
    regions_.assign(n, 0);
    cell_regret_.assign(n, 0.0);
    result_.phase3.resize(n);
    ledger_ = std::make_unique<LedgerBuilder>(result_.opt, config.ledger_stride);
    checkpoints_ = options.phase3_checkpoints;
    std::sort(checkpoints_.begin(), checkpoints_.end());
  }

  RunResult run() {
    for (const EpochPlan& e : result_.plan.epochs) {
      run_epoch(e);
      if (stopped_) break;
    }
    finish();
    return std::move(result_);
  }

 private:
  const Plan& plan() const { return result_.plan; }

  void marker(const char* name, std::uint64_t round) {
    if (options_.sink != nullptr) options_.sink->on_marker(name, round);
  }

  void run_epoch(const EpochPlan& e) {
    marker("epoch_begin", e.begin);
    if (e.has_phase1()) {
      if (e.fresh_phase1) {
        for (Agent& a : agents_) a.p1 = Phase1State(plan().k_cells, plan().phase1);
      }
      marker("phase1_begin", e.phase1_begin);
      for (std::uint64_t t = e.phase1_begin; t < e.phase1_end; ++t) round_phase1(t);
      if (agents_.front().p1.done()) {
        end_phase1(e);
        if (options_.stop_after == StopAfter::Phase1) {
          stopped_ = true;
          return;
        }
      }
    }
    if (e.has_phase2() || e.selects) {
      if (!agents_.front().p1.done()) throw InternalError("phase II planned before phase I completes");
      begin_phase2(e);
      marker("phase2_begin", e.phase2_begin);
      if (aggregate_phase2()) {
        bulk_phase2(e);
      } else {
        for (std::uint64_t t = e.phase2_begin; t < e.phase2_end; ++t) {
          round_phase2(t, e.level_rounds_before + (t - e.phase2_begin));
        }
      }
    }
    if (e.selects) {
      select(e);
      if (options_.stop_after == StopAfter::Selection) {
        seating_open_ = false;
        stopped_ = true;
        return;
      }
      marker("exploit_begin", e.phase2_end);
      for (std::uint64_t t = e.phase2_end; t < e.end; ++t) round_exploit(t);
      close_seating();
    }
  }

  // Phase I ---------------------------------------------------------------

  void round_phase1(std::uint64_t t) {
    for (Agent& a : agents_) {
      a.role = Role::PhaseI;
      a.cell = a.p1.choose(a.rng1);
      actions_[a.id] = world_.arena.center(a.cell);
      regions_[a.id] = a.cell;
    }
    resolve(t, Stage::PhaseI);
    for (Agent& a : agents_) a.p1.update(a.cell, outcomes_[a.id]);
  }

  void end_phase1(const EpochPlan& e) {
    Phase1Record rec;
    rec.epoch = e.index;
    rec.end_round = e.phase1_end;
    const double slack = world_.instance.lipschitz() * world_.arena.center_radius();
    const double p = success_probability(plan().k_cells, plan().n_players);
    const double t0 = static_cast<double>(plan().phase1.t0);
    for (Agent& a : agents_) {
      a.bracket0 = phase1_brackets(a.p1, slack);
      a.active = active_set(a.bracket0, plan().n_players);
      rec.counts.push_back(a.p1.counts());
      std::vector<double> means(plan().k_cells);
      for (std::size_t c = 0; c < plan().k_cells; ++c) means[c] = a.p1.mean(c);
      rec.means.push_back(std::move(means));
      rec.brackets.push_back(a.bracket0);
      rec.active.push_back(a.active.cells);
      for (std::size_t c = 0; c < plan().k_cells; ++c) {
        const double sup = result_.suprema[c];
        if (!(a.bracket0.lcb[c] <= sup + kTol && sup <= a.bracket0.ucb[c] + kTol)) rec.valid = false;
        const double o = static_cast<double>(a.p1.counts()[c]);
        if (o < 0.5 * t0 * p || o > 1.5 * t0 * p) rec.counts_ok = false;
        const double mu_c = world_.instance.mean(world_.arena.center(c));
        if (std::abs(a.p1.mean(c) - mu_c) > a.p1.radius(c) + kTol) rec.means_ok = false;
      }
    }
    result_.flags.phase1_valid = result_.flags.phase1_valid && rec.valid;
    result_.flags.phase1_counts = result_.flags.phase1_counts && rec.counts_ok;
    result_.flags.phase1_means = result_.flags.phase1_means && rec.means_ok;
    result_.phase1.push_back(std::move(rec));
    marker("phase1_end", e.phase1_end);
  }

  // Phase II --------------------------------------------------------------

  void begin_phase2(const EpochPlan& e) {
    const bool stratified = plan().sampling == Sampling::Stratified;
    if (stratified && (e.fresh_phase2 || e.refine || !schedule_ready_)) {
      std::vector<std::size_t> sizes(plan().k_cells);
      for (std::size_t c = 0; c < plan().k_cells; ++c) sizes[c] = grid_size(e.net_counts[c], world_.arena.dim());
      schedule_ = StratifiedSchedule(std::move(sizes), plan().n_players);
      schedule_ready_ = true;
    }
    for (Agent& a : agents_) {
      const bool fresh = e.fresh_phase2 || !a.p2_ready;
      if (fresh) {
        a.tracked.clear();
        if (stratified) {
          for (std::size_t c = 0; c < plan().k_cells; ++c) a.tracked.push_back(c);
        } else {
          a.tracked = a.active.cells;
        }
        a.p2 = Phase2State(nets_for(world_.arena, a.tracked, e), e.params);
        a.p2_ready = true;
      } else if (e.refine) {
        a.p2.refine(nets_for(world_.arena, a.tracked, e));
        a.p2.set_params(e.params);
      } else {
        a.p2.set_params(e.params);
      }
      const std::uint64_t need = e.params.t1 > e.level_rounds_before ? e.params.t1 - e.level_rounds_before : 0;
      const std::uint64_t room = std::numeric_limits<std::uint64_t>::max() - a.p2.round();
      a.p2.set_budget(a.p2.round() + std::min(need, room));
    }
  }

  void round_phase2(std::uint64_t t, std::uint64_t schedule_round) {
    const bool stratified = plan().sampling == Sampling::Stratified;
    for (Agent& a : agents_) {
      a.role = Role::PhaseII;
      a.choice = stratified ? a.p2.choose_stratified(schedule_, a.id, schedule_round) : a.p2.choose_uniform(a.rng2);
      actions_[a.id] = a.p2.point(a.choice);
      regions_[a.id] = a.p2.nets()[a.choice.slot].cell;
    }
    resolve(t, Stage::PhaseII);
    for (Agent& a : agents_) a.p2.update(a.choice, outcomes_[a.id]);
  }

  bool aggregate_phase2() const {
    if (!options_.aggregate_solo_phase2) return false;
    if (options_.sink != nullptr) throw ConfigError("bulk phase II cannot produce a trace");
    return agents_.size() == 1 && plan().sampling == Sampling::Uniform;
  }

  // Solo uniform Phase II in one shot: visit counts by sequential
  // conditional binomials, then binomial reward sums per probe.
  void bulk_phase2(const EpochPlan& e) {
    Agent& a = agents_.front();
    const std::uint64_t rounds = e.phase2_end - e.phase2_begin;
    if (rounds == 0) return;
    const auto& nets = a.p2.nets();
    const double m = static_cast<double>(nets.size());
    std::uint64_t left = rounds;
    double mass = 1.0;
    double reward = 0.0;
    double pseudo = 0.0;
    std::mt19937_64 visits(a.rng2.next());
    std::mt19937_64 rewards(env_.reward_stream().next());
    for (std::size_t s = 0; s < nets.size(); ++s) {
      const double p = 1.0 / (m * static_cast<double>(nets[s].size()));
      for (std::size_t z = 0; z < nets[s].size(); ++z) {
        std::uint64_t n = left;
        const double cond = p / mass;
        if (cond < 1.0 && left > 0) n = std::binomial_distribution<std::uint64_t>(left, cond)(visits);
        left -= n;
        mass = std::max(0.0, mass - p);
        const double mu = std::clamp(world_.instance.mean(nets[s].points[z]), 0.0, 1.0);
        const std::uint64_t ones = n == 0 ? 0 : std::binomial_distribution<std::uint64_t>(n, mu)(rewards);
        a.p2.absorb(Phase2State::Choice{s, z}, n, static_cast<double>(ones));
        reward += static_cast<double>(ones);
        pseudo += static_cast<double>(n) * mu;
      }
    }
    a.p2.advance(rounds);
    ledger_->add_bulk(Stage::PhaseII, rounds, reward, pseudo);
  }

  void select(const EpochPlan& e) {
    SelectionRecord rec;
    rec.epoch = e.index;
    rec.round = e.phase2_end;
    rec.epsilon = e.epsilon;
    rec.epsilon_int = e.epsilon_int;
    rec.params = e.params;
    rec.dither_offsets = e.dither.offsets;
    rec.min_count = std::numeric_limits<std::uint64_t>::max();
    const DitherTable* dither = plan().dither ? &e.dither : nullptr;
    for (Agent& a : agents_) {
      const Bracket refined = refined_brackets(a.p2, a.active.cells);
      const Selection sel = select_top_n(refined, dither, plan().n_players);
      const bool changed = sel.cells != a.targets;
      if (changed) {
        a.targets = sel.cells;
        a.seat.reset();
        a.learner.reset();
      }
      rec.reseated.push_back(changed ? 1 : 0);
      rec.active.push_back(a.active.cells);
      rec.selected.push_back(sel.cells);
      if (sel.shortfall) rec.eps_optimal = false;

      std::uint64_t succ = 0;
      std::size_t probes = 0;
      for (std::size_t s = 0; s < a.p2.nets().size(); ++s) {
        for (std::size_t z = 0; z < a.p2.nets()[s].size(); ++z) succ += a.p2.count(s, z);
        probes += a.p2.nets()[s].size();
      }
      rec.successes.push_back(succ);
      rec.probes.push_back(probes);
      for (std::size_t i = 0; i < refined.size(); ++i) {
        const std::size_t c = refined.cells[i];
        const std::size_t slot = a.p2.slot_of(c);
        const double sup = result_.suprema[c];
        if (!(refined.lcb[i] <= sup + kTol && sup <= refined.ucb[i] + kTol)) rec.brackets_valid = false;
        rec.max_width = std::max(rec.max_width, refined.ucb[i] - refined.lcb[i]);
        const ProbeNet& net = a.p2.nets()[slot];
        for (std::size_t z = 0; z < net.size(); ++z) {
          const auto cnt = a.p2.count(slot, z);
          rec.min_count = std::min(rec.min_count, cnt);
          if (cnt < e.params.b) {
            rec.coverage = false;
          } else if (std::abs(a.p2.mean(slot, z) - world_.instance.mean(net.points[z])) > e.params.r1 + kTol) {
            rec.accuracy = false;
          }
        }
      }
      for (std::size_t c : sel.cells) {
        if (result_.suprema[c] < nth_best_ - e.epsilon - kTol) rec.eps_optimal = false;
      }
      rec.refined.push_back(refined);
    }
    for (const auto& s : rec.selected) {
      if (s != rec.selected.front()) rec.consensus = false;
    }
    RunFlags& f = result_.flags;
    f.phase2_coverage = f.phase2_coverage && rec.coverage;
    f.phase2_accuracy = f.phase2_accuracy && rec.accuracy;
    f.phase2_brackets = f.phase2_brackets && rec.brackets_valid;
    f.consensus = f.consensus && rec.consensus;
    f.eps_optimal = f.eps_optimal && rec.eps_optimal;
    result_.selections.push_back(std::move(rec));
    marker("selection", e.phase2_end);

    SeatingRecord s;
    s.epoch = e.index;
    s.start_round = e.phase2_end;
    result_.seating.push_back(std::move(s));
    seating_open_ = true;
    seating_rounds_ = 0;
  }

  // Musical chairs and Phase III ---------------------------------------------

  Region seat_region(std::size_t cell) const { return world_.seat_regions[cell]; }

  void round_exploit(std::uint64_t t) {
    std::size_t unseated = 0;
    for (const Agent& a : agents_) unseated += a.seat ? 0 : 1;
    const Stage stage = unseated > 0 ? Stage::Seating : Stage::PhaseIII;
    if (seating_open_ && unseated > 0) result_.seating.back().unseated_trace.push_back(unseated);
    for (Agent& a : agents_) {
      if (a.seat) {
        a.role = Role::PhaseIII;
        a.grid_index = a.learner->choose();
        actions_[a.id] = a.learner->point(a.grid_index);
        regions_[a.id] = *a.seat;
      } else {
        a.role = Role::Chairs;
        a.cell = a.targets[static_cast<std::size_t>(a.rng_mc.index(a.targets.size()))];
        actions_[a.id] = world_.arena.center(a.cell);
        regions_[a.id] = a.cell;
      }
    }
    resolve(t, stage);
    for (Agent& a : agents_) {
      const PlayerOutcome& o = outcomes_[a.id];
      if (a.role == Role::PhaseIII) {
        const double mu = o.collided ? 0.0 : world_.instance.mean(actions_[a.id]);
        cell_regret_[a.id] += result_.suprema[*a.seat] - mu;
        a.learner->update(a.grid_index, o);
        if (a.learner->epoch_round() == 0) {
          result_.phase3[a.id].curve.push_back(CurvePoint{a.learner->total_rounds(), cell_regret_[a.id]});
        }
      } else if (!o.collided) {
        a.seat = a.cell;
        a.learner.emplace(seat_region(a.cell), world_.instance.lipschitz(), world_.arena.scale(),
                          config_.ucb_constant);
        cell_regret_[a.id] = 0.0;
        result_.phase3[a.id].curve.clear();
      }
    }
    if (seating_open_) {
      ++seating_rounds_;
      bool all = true;
      for (const Agent& a : agents_) all = all && a.seat.has_value();
      if (all) close_seating();
    }
  }

  void close_seating() {
    if (!seating_open_) return;
    SeatingRecord& s = result_.seating.back();
    bool all = true;
    std::set<std::size_t> cells;
    for (const Agent& a : agents_) {
      s.assignment.push_back(a.seat);
      if (a.seat) {
        if (!cells.insert(*a.seat).second) s.distinct = false;
      } else {
        all = false;
      }
    }
    if (all) s.t_mc = seating_rounds_;
    seating_open_ = false;
    marker("seated", s.start_round + seating_rounds_);
  }

  // Round resolution and accounting ------------------------------------------

  void resolve(std::uint64_t t, Stage stage) {
    env_.resolve(actions_, outcomes_);
    double reward = 0.0;
    double pseudo = 0.0;
    const auto si = static_cast<std::size_t>(stage);
    for (std::size_t j = 0; j < agents_.size(); ++j) {
      roles_[j] = agents_[j].role;
      const PlayerOutcome& o = outcomes_[j];
      if (o.collided) {
        ++result_.counters.collisions_by_stage[si];
        if (stage == Stage::PhaseIII) ++result_.counters.post_seating_collisions;
        if (!world_.arena.is_partition()) count_inter_ball(j);
        continue;
      }
      reward += o.reward;
      pseudo += world_.instance.mean(actions_[j]);
    }
    ledger_->add(stage, reward, pseudo);
    if (stage == Stage::PhaseIII) {
      ++phase3_rounds_;
      while (next_checkpoint_ < checkpoints_.size() && checkpoints_[next_checkpoint_] == phase3_rounds_) {
        const RegretLedger& l = ledger_->ledger();
        const auto iii = static_cast<std::size_t>(Stage::PhaseIII);
        result_.checkpoints.push_back(
            Checkpoint{phase3_rounds_, t + 1, l.regret_by_stage[iii], l.pseudo_by_stage[iii]});
        ++next_checkpoint_;
      }
    }
    if (options_.sink != nullptr) {
      options_.sink->on_round(RoundView{t, stage, actions_, outcomes_, roles_});
    }
  }

  void count_inter_ball(std::size_t j) {
    const double r2 = world_.collisions.rho * world_.collisions.rho;
    for (std::size_t k = 0; k < agents_.size(); ++k) {
      if (k == j || regions_[k] == regions_[j]) continue;
      if (distance_sq(actions_[j], actions_[k]) <= r2) {
        ++result_.counters.inter_ball_collisions;
        return;
      }
    }
  }

  void finish() {
    close_seating();
    result_.ledger = ledger_->finish();
    result_.counters.clamp_count = env_.clamp_count();
    for (Agent& a : agents_) {
      Phase3Record& r = result_.phase3[a.id];
      r.cell = a.seat;
      if (a.learner) {
        r.epochs = a.learner->epoch() + 1;
        const std::size_t b = a.learner->best_index();
        r.best_point = a.learner->point(b);
        r.best_mean = a.learner->mean(b);
        if (r.curve.empty() || r.curve.back().rounds != a.learner->total_rounds()) {
          r.curve.push_back(CurvePoint{a.learner->total_rounds(), cell_regret_[a.id]});
        }
      }
    }
  }

  const ProtocolConfig& config_;
  const RunOptions& options_;
  World world_;
  Environment env_;
  RunResult result_;
  double nth_best_ = 0.0;
  std::vector<Agent> agents_;
  std::vector<Point> actions_;
  std::vector<PlayerOutcome> outcomes_;
  std::vector<Role> roles_;
  std::vector<std::size_t> regions_;
  std::vector<double> cell_regret_;
  std::unique_ptr<LedgerBuilder> ledger_;
  StratifiedSchedule schedule_;
  bool schedule_ready_ = false;
  bool stopped_ = false;
  bool seating_open_ = false;
  std::uint64_t seating_rounds_ = 0;
  std::uint64_t phase3_rounds_ = 0;
  std::vector<std::uint64_t> checkpoints_;
  std::size_t next_checkpoint_ = 0;
};

}  // namespace

World build_world(const ProtocolConfig& config) {
  if (config.packing) {
    const PackingSpec& p = *config.packing;
    Arena arena = packing_reduce(p.centers, p.r, p.rho, p.sigma, config.n_players);
    Instance inst = make_instance(resolve_instance(config));
    if (inst.dim() != arena.dim()) throw ConfigError("instance dimension does not match the packing");
    std::vector<Region> seats = arena.regions();
    const double core = std::min(p.sigma, p.rho);
    for (Region& r : seats) {
      r = Arena::from_balls(arena.dim(), std::span<const Point>(&r.center, 1), core).region(0);
    }
    return World{std::move(arena), std::move(inst), CollisionModel::distance_threshold(p.rho), std::move(seats)};
  }
  PartitionGeometry g(config.d, config.h);
  Arena arena = Arena::from_partition(g);
  Instance inst = make_instance(resolve_instance(config));
  if (inst.dim() != arena.dim()) throw ConfigError("instance dimension does not match d");
  std::vector<Region> seats = arena.regions();
  return World{std::move(arena), std::move(inst), CollisionModel::partition(), std::move(seats)};
}

std::optional<std::uint64_t> RunResult::first_t_mc() const {
  if (seating.empty()) return std::nullopt;
  return seating.front().t_mc;
}

RunResult run_protocol(const ProtocolConfig& config, const RunOptions& options) {
  Runner runner(config, options);
  return runner.run();
}

}  // namespace lipmab
