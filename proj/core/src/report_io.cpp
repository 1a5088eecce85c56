#include "lipmab/report_io.hpp"

#include "json.hpp"
#include "lipmab/ledger.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

using nlohmann::ordered_json;

namespace {

ordered_json point_json(const Point& p) { return std::vector<double>(p.begin(), p.end()); }

ordered_json params_json(const Phase2Params& p) {
  ordered_json j;
  j["epsilon"] = p.epsilon;
  j["eta"] = p.eta;
  j["beta1"] = p.beta1;
  j["r1"] = p.r1;
  j["q"] = p.q;
  j["b"] = p.b;
  j["t1"] = p.t1;
  j["n_probe"] = p.n_probe;
  j["m_act"] = p.m_act;
  j["p_max"] = p.p_max;
  j["stratified_slots"] = p.stratified_slots;
  return j;
}

ordered_json instance_json(const InstanceSpec& spec, const std::vector<double>& suprema,
                           const std::vector<Point>& hidden) {
  ordered_json j;
  j["kind"] = spec.kind;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  j["params"] = params;
  j["cells"] = spec.cells;
  j["seed"] = spec.seed;
  j["suprema"] = suprema;
  ordered_json h = ordered_json::array();
  for (const Point& p : hidden) h.push_back(point_json(p));
  j["hidden"] = h;
  return j;
}

}  // namespace

std::string summary_json(const ProtocolConfig& config, const RunResult& r) {
  ordered_json j;
  j["mode"] = std::string(to_string(r.plan.mode));
  j["sampling"] = std::string(to_string(r.plan.sampling));
  j["dither"] = r.plan.dither;
  j["players"] = r.plan.n_players;
  j["cells"] = r.plan.k_cells;
  j["horizon"] = r.plan.horizon;
  j["seed"] = config.seed;
  j["lipschitz"] = r.plan.lipschitz;
  j["opt"] = r.opt;

  ordered_json budgets;
  budgets["delta_phase1"] = r.plan.budget.delta_phase1;
  budgets["delta_phase2"] = r.plan.budget.delta_phase2;
  budgets["t0"] = r.plan.phase1.t0;
  budgets["beta0"] = r.plan.phase1.beta0;
  budgets["phase1_rounds"] = r.plan.phase1_rounds();
  budgets["phase2_rounds"] = r.plan.phase2_rounds();
  budgets["identification_rounds"] = r.plan.identification_rounds();
  j["budgets"] = budgets;

  ordered_json epochs = ordered_json::array();
  for (const EpochPlan& e : r.plan.epochs) {
    ordered_json x;
    x["index"] = e.index;
    x["begin"] = e.begin;
    x["end"] = e.end;
    x["epsilon"] = e.epsilon;
    x["epsilon_int"] = e.epsilon_int;
    x["level"] = e.level;
    x["phase1"] = {e.phase1_begin, e.phase1_end};
    x["phase2"] = {e.phase2_begin, e.phase2_end};
    x["refine"] = e.refine;
    x["selects"] = e.selects;
    x["params"] = params_json(e.params);
    epochs.push_back(x);
  }
  j["epochs"] = epochs;

  ordered_json p1 = ordered_json::array();
  for (const Phase1Record& rec : r.phase1) {
    ordered_json x;
    x["epoch"] = rec.epoch;
    x["end_round"] = rec.end_round;
    x["valid"] = rec.valid;
    x["counts_ok"] = rec.counts_ok;
    x["means_ok"] = rec.means_ok;
    x["active"] = rec.active;
    ordered_json players = ordered_json::array();
    for (std::size_t k = 0; k < rec.brackets.size(); ++k) {
      ordered_json pl;
      pl["counts"] = rec.counts[k];
      pl["lcb"] = rec.brackets[k].lcb;
      pl["ucb"] = rec.brackets[k].ucb;
      players.push_back(pl);
    }
    x["players"] = players;
    p1.push_back(x);
  }
  j["phase1"] = p1;

  ordered_json sel = ordered_json::array();
  for (const SelectionRecord& rec : r.selections) {
    ordered_json x;
    x["epoch"] = rec.epoch;
    x["round"] = rec.round;
    x["epsilon"] = rec.epsilon;
    x["epsilon_int"] = rec.epsilon_int;
    x["dither_offsets"] = rec.dither_offsets;
    x["selected"] = rec.selected;
    x["reseated"] = rec.reseated;
    x["min_count"] = rec.min_count;
    x["max_width"] = rec.max_width;
    x["coverage"] = rec.coverage;
    x["accuracy"] = rec.accuracy;
    x["brackets_valid"] = rec.brackets_valid;
    x["consensus"] = rec.consensus;
    x["eps_optimal"] = rec.eps_optimal;
    sel.push_back(x);
  }
  j["selections"] = sel;

  ordered_json seat = ordered_json::array();
  for (const SeatingRecord& rec : r.seating) {
    ordered_json x;
    x["epoch"] = rec.epoch;
    x["start_round"] = rec.start_round;
    x["t_mc"] = rec.t_mc ? ordered_json(*rec.t_mc) : ordered_json(nullptr);
    ordered_json a = ordered_json::array();
    for (const auto& c : rec.assignment) a.push_back(c ? ordered_json(*c) : ordered_json(nullptr));
    x["assignment"] = a;
    x["distinct"] = rec.distinct;
    std::uint64_t mass = 0;
    for (std::size_t u : rec.unseated_trace) mass += u;
    x["unseated_mass"] = mass;
    seat.push_back(x);
  }
  j["seating"] = seat;

  ordered_json p3 = ordered_json::array();
  for (const Phase3Record& rec : r.phase3) {
    ordered_json x;
    x["cell"] = rec.cell ? ordered_json(*rec.cell) : ordered_json(nullptr);
    x["epochs"] = rec.epochs;
    x["best_point"] = rec.best_point ? point_json(*rec.best_point) : ordered_json(nullptr);
    x["best_mean"] = rec.best_mean;
    x["in_cell_regret"] = rec.curve.empty() ? 0.0 : rec.curve.back().regret;
    p3.push_back(x);
  }
  j["phase3"] = p3;

  ordered_json flags;
  flags["clean"] = r.flags.clean();
  flags["phase1_valid"] = r.flags.phase1_valid;
  flags["phase1_counts"] = r.flags.phase1_counts;
  flags["phase1_means"] = r.flags.phase1_means;
  flags["phase2_coverage"] = r.flags.phase2_coverage;
  flags["phase2_accuracy"] = r.flags.phase2_accuracy;
  flags["phase2_brackets"] = r.flags.phase2_brackets;
  flags["consensus"] = r.flags.consensus;
  flags["eps_optimal"] = r.flags.eps_optimal;
  j["flags"] = flags;

  ordered_json counters;
  ordered_json by_stage;
  for (std::size_t s = 0; s < kStages; ++s) {
    by_stage[std::string(to_string(static_cast<Stage>(s)))] = r.counters.collisions_by_stage[s];
  }
  counters["collisions"] = by_stage;
  counters["post_seating_collisions"] = r.counters.post_seating_collisions;
  counters["inter_ball_collisions"] = r.counters.inter_ball_collisions;
  counters["clamp_count"] = r.counters.clamp_count;
  j["counters"] = counters;

  ordered_json ledger;
  ledger["rounds"] = r.ledger.rounds;
  ledger["total_reward"] = r.ledger.total_reward;
  ledger["total_regret"] = r.ledger.total_regret();
  ledger["total_pseudo_regret"] = r.ledger.total_pseudo_regret();
  ordered_json dec;
  ordered_json pdec;
  ordered_json rounds;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::string name(to_string(static_cast<Stage>(s)));
    dec[name] = r.ledger.regret_by_stage[s];
    pdec[name] = r.ledger.pseudo_by_stage[s];
    rounds[name] = r.ledger.rounds_by_stage[s];
  }
  ledger["regret_by_stage"] = dec;
  ledger["pseudo_regret_by_stage"] = pdec;
  ledger["rounds_by_stage"] = rounds;
  j["ledger"] = ledger;
  return j.dump(2) + "\n";
}

std::string manifest_json(const ProtocolConfig& config, const RunResult& r) {
  ordered_json j;
  j["config"] = ordered_json::parse(config_to_json(config, -1));
  ordered_json seeds;
  seeds["master"] = config.seed;
  seeds["env"] = derive_seed(config.seed, "env", 0);
  ordered_json players = ordered_json::array();
  for (std::size_t p = 0; p < config.n_players; ++p) {
    ordered_json x;
    x["phase1"] = derive_seed(config.seed, "player.phase1", p);
    x["phase2"] = derive_seed(config.seed, "player.phase2", p);
    x["seating"] = derive_seed(config.seed, "player.seating", p);
    players.push_back(x);
  }
  seeds["players"] = players;
  j["seeds"] = seeds;
  j["instance"] = instance_json(r.instance, r.suprema, r.hidden);
  return j.dump(2) + "\n";
}

std::string instance_manifest_json(const InstanceSpec& spec, const std::vector<double>& suprema,
                                   const std::vector<Point>& hidden) {
  return instance_json(spec, suprema, hidden).dump(2) + "\n";
}

}  // namespace lipmab
