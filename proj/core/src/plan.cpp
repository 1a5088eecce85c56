#include "lipmab/plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "lipmab/errors.hpp"

namespace lipmab {

FailureBudget budget_split(double delta_sys, std::size_t n_players) {
  if (!(delta_sys > 0.0 && delta_sys < 0.25)) throw DomainError("delta_sys must lie in (0, 1/4)");
  if (n_players == 0) throw DomainError("budget_split needs N >= 1");
  const double v = delta_sys / (2.0 * static_cast<double>(n_players));
  return FailureBudget{v, v};
}

double single_shot_epsilon(std::size_t k_cells, double lipschitz, double h, int d, std::uint64_t horizon) {
  if (horizon < 1) throw DomainError("horizon must be positive");
  const double ratio = static_cast<double>(k_cells) * std::pow(lipschitz * h, d) / static_cast<double>(horizon);
  const double eps = std::pow(ratio, 1.0 / (d + 3.0));
  return std::clamp(eps, std::numeric_limits<double>::min(), 1.0);
}

std::vector<EpochSpec> epoch_schedule(std::uint64_t horizon, int d, double epsilon0) {
  if (horizon < 1) throw DomainError("horizon must be positive");
  if (!(epsilon0 > 0.0 && epsilon0 <= 1.0)) throw DomainError("epsilon0 must lie in (0, 1]");
  std::vector<EpochSpec> out;
  std::uint64_t used = 0;
  for (int k = 0; used < horizon; ++k) {
    const std::uint64_t len = std::min<std::uint64_t>(std::uint64_t{1} << k, horizon - used);
    out.push_back(EpochSpec{len, epsilon0 * std::exp2(-static_cast<double>(k) / (d + 2.0))});
    used += len;
  }
  return out;
}

Arena packing_reduce(const std::vector<Point>& centers, double r, double rho, double sigma,
                     std::size_t n_players) {
  if (centers.empty()) throw ConfigError("packing: no centers");
  if (!(rho > 0.0)) throw ConfigError("packing: rho must be positive");
  if (!(r > rho)) throw ConfigError("packing: need r > rho (r=" + std::to_string(r) + ", rho=" + std::to_string(rho) + ")");
  if (!(sigma > 0.0 && sigma < (r - rho) / 2.0)) {
    throw ConfigError("packing: need 0 < sigma < (r - rho)/2 = " + std::to_string((r - rho) / 2.0) +
                      ", got sigma=" + std::to_string(sigma));
  }
  if (centers.size() < n_players) {
    throw ConfigError("packing: M=" + std::to_string(centers.size()) + " balls for N=" +
                      std::to_string(n_players) + " players");
  }
  const int d = centers.front().dim();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i].dim() != d || !in_unit_cube(centers[i])) {
      throw ConfigError("packing: center " + std::to_string(i) + " outside [0,1]^d");
    }
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      const double dist = distance(centers[i], centers[j]);
      if (dist < r) {
        std::ostringstream os;
        os.precision(17);
        os << "packing: centers " << i << " and " << j << " are " << dist << " apart, below r=" << r;
        throw ConfigError(os.str());
      }
    }
  }
  return Arena::from_balls(d, centers, sigma);
}

std::uint64_t Plan::phase1_rounds() const noexcept {
  std::uint64_t s = 0;
  for (const auto& e : epochs) s += e.phase1_end - e.phase1_begin;
  return s;
}

std::uint64_t Plan::phase2_rounds() const noexcept {
  std::uint64_t s = 0;
  for (const auto& e : epochs) s += e.phase2_end - e.phase2_begin;
  return s;
}

std::uint64_t Plan::identification_rounds() const noexcept { return phase1_rounds() + phase2_rounds(); }

namespace {

int next_power_of_3(int n) {
  int p = 1;
  while (p < n) p *= 3;
  return p;
}

// Fills epsilon, nets, params and dither of one precision level.
void fill_level(EpochPlan& e, double eps, const Plan& plan, const Arena& arena, bool triadic,
                double extra_log) {
  e.epsilon = eps;
  e.epsilon_int = plan.dither ? eps / 4.0 : eps;
  const double eta = e.epsilon_int / (2.0 * plan.lipschitz);
  const double s = eta / std::sqrt(static_cast<double>(arena.dim()));
  e.net_counts.resize(arena.size());
  std::size_t p_max = 1;
  for (std::size_t c = 0; c < arena.size(); ++c) {
    GridCounts g = counts_for_spacing(arena.region(c), s);
    if (triadic) {
      for (int k = 0; k < arena.dim(); ++k) g[static_cast<std::size_t>(k)] = next_power_of_3(g[static_cast<std::size_t>(k)]);
    }
    e.net_counts[c] = g;
    p_max = std::max(p_max, grid_size(g, arena.dim()));
  }
  const std::size_t n_probe = plan.n_players * plan.k_cells * p_max;
  e.params = phase2_params(e.epsilon_int, plan.lipschitz, plan.budget.delta_phase2, n_probe, plan.k_cells,
                           p_max, plan.n_players, extra_log);
  if (plan.sampling == Sampling::Stratified) {
    e.params = with_stratified(e.params, std::max(plan.k_cells, plan.n_players));
  }
  if (plan.dither) {
    e.dither = dither_table(plan.k_cells, eps);
    e.params = dither_gap_enforce(e.params, e.dither.min_gap);
  }
}

std::string budgets_message(const Plan& p, const EpochPlan& e) {
  std::ostringstream os;
  os << "infeasible budgets: T0=" << p.phase1.t0 << " + T1=" << e.params.t1 << " >= T=" << p.horizon
     << " (epsilon=" << e.epsilon << ", b=" << e.params.b << ", P_max=" << e.params.p_max << ")";
  return os.str();
}

}  // namespace

Plan make_plan(const ProtocolConfig& config, const Arena& arena, double lipschitz) {
  Plan plan;
  plan.mode = config.mode;
  plan.sampling = config.effective_sampling();
  plan.k_cells = arena.size();
  plan.n_players = config.n_players;
  plan.horizon = config.horizon;
  plan.lipschitz = lipschitz;
  plan.dither = config.dither && plan.k_cells >= 2;
  plan.reuse = config.mode == Mode::Epochic || config.mode == Mode::StratifiedEpochic;
  if (config.n_players == 0) throw ConfigError("need at least one player");
  if (plan.k_cells < plan.n_players) {
    throw ConfigError("need at least as many cells as players (K=" + std::to_string(plan.k_cells) +
                      ", N=" + std::to_string(plan.n_players) + ")");
  }
  if (config.horizon < 1) throw ConfigError("horizon must be positive");
  plan.budget = budget_split(config.delta_sys, config.n_players);
  plan.phase1 = phase1_budget(plan.k_cells, plan.n_players, plan.budget.delta_phase1, config.alpha);
  const std::uint64_t t0 = plan.phase1.t0;
  const std::uint64_t horizon = config.horizon;

  if (!config.epochic()) {
    double eps = config.epsilon;
    if (config.mode == Mode::SingleShotAuto) {
      eps = single_shot_epsilon(plan.k_cells, lipschitz, arena.scale(), arena.dim(), horizon);
    }
    if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
    EpochPlan e;
    e.begin = 0;
    e.end = horizon;
    fill_level(e, eps, plan, arena, false, 0.0);
    if (t0 > horizon || e.params.t1 >= horizon - t0) throw ConfigError(budgets_message(plan, e));
    e.phase1_begin = 0;
    e.phase1_end = t0;
    e.phase2_begin = t0;
    e.phase2_end = t0 + e.params.t1;
    e.fresh_phase1 = e.fresh_phase2 = true;
    e.selects = true;
    plan.epochs.push_back(std::move(e));
    return plan;
  }

  if (t0 > horizon) {
    throw ConfigError("infeasible budgets: T0=" + std::to_string(t0) + " exceeds T=" + std::to_string(horizon));
  }
  const auto schedule = epoch_schedule(horizon, arena.dim(), config.epsilon0);
  const double extra_log = schedule.size() > 1 ? std::log(static_cast<double>(schedule.size())) : 0.0;
  const bool restart = config.mode == Mode::EpochicRestart;

  std::uint64_t begin = 0;
  std::uint64_t phase1_left = t0;
  std::uint64_t level_rounds = 0;
  std::vector<GridCounts> level_counts;
  int level = -1;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    EpochPlan e;
    e.index = static_cast<int>(k);
    e.begin = begin;
    e.end = begin + schedule[k].length;
    begin = e.end;
    std::uint64_t t = e.begin;
    fill_level(e, schedule[k].epsilon, plan, arena, !restart, extra_log);

    if (restart) {
      phase1_left = t0;
      level_rounds = 0;
      e.fresh_phase1 = true;
    } else if (phase1_left == t0) {
      e.fresh_phase1 = true;
    }
    if (phase1_left > 0) {
      const std::uint64_t len = std::min(phase1_left, e.end - t);
      e.phase1_begin = t;
      e.phase1_end = t + len;
      t += len;
      phase1_left -= len;
    } else {
      e.phase1_begin = e.phase1_end = t;
    }
    e.phase2_begin = e.phase2_end = t;
    if (phase1_left > 0) {
      e.level = std::max(level, 0);
      plan.epochs.push_back(std::move(e));
      continue;
    }
    if (restart) {
      e.fresh_phase2 = true;
      ++level;
    } else if (level < 0) {
      e.fresh_phase2 = true;
      level = 0;
      level_counts = e.net_counts;
    } else if (e.net_counts != level_counts) {
      e.refine = true;
      ++level;
      level_rounds = 0;
      level_counts = e.net_counts;
    }
    e.level = level;
    e.level_rounds_before = level_rounds;
    const std::uint64_t need = e.params.t1 > level_rounds ? e.params.t1 - level_rounds : 0;
    const std::uint64_t len = std::min(need, e.end - t);
    e.phase2_begin = t;
    e.phase2_end = t + len;
    level_rounds += len;
    e.selects = level_rounds >= e.params.t1;
    plan.epochs.push_back(std::move(e));
  }
  return plan;
}

}  // namespace lipmab
