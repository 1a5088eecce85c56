#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipmab/config.hpp"
#include "lipmab/harness.hpp"
#include "lipmab/instances.hpp"
#include "lipmab/ledger.hpp"
#include "lipmab/orchestrator.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/phase2.hpp"
#include "lipmab/plan.hpp"
#include "lipmab/report_io.hpp"
#include "lipmab/rng.hpp"
#include "lipmab/seating.hpp"

using namespace lipmab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string frac(std::uint64_t a, std::uint64_t b) { return std::to_string(a) + "/" + std::to_string(b); }

ProtocolConfig config(std::size_t n, double h, const std::string& kind, std::map<std::string, double> params = {}) {
  ProtocolConfig c;
  c.n_players = n;
  c.d = 1;
  c.h = h;
  c.instance.kind = kind;
  c.instance.params = std::move(params);
  c.delta_sys = 0.1;
  c.horizon = std::uint64_t{1} << 40;
  return c;
}

// 1 --------------------------------------------------------------------------
Outcome formulas(std::uint64_t) {
  std::vector<std::string> bad;
  auto near = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-12)) bad.push_back(std::string(what) + "=" + fmt(got));
  };
  near("p_K(4,2)", success_probability(4, 2), 0.1875);
  near("drift(3,5)", drift(3, 5), 1.152);
  const FailureBudget b = budget_split(0.1, 5);
  near("delta_I", b.delta_phase1, 0.01);
  near("delta_II", b.delta_phase2, 0.01);
  const DitherTable d = dither_table(5, 0.2);
  const std::vector<double> want{0.0, 0.0375, 0.075, 0.1125, 0.15};
  if (d.offsets.size() != want.size()) bad.push_back("dither size");
  for (std::size_t i = 0; i < std::min(want.size(), d.offsets.size()); ++i) near("dither", d.offsets[i], want[i]);
  const Phase2Params p = phase2_params(0.2, 1.0, 0.05, 20, 2, 10, 2);
  const double width = 2.0 * p.r1 + 1.0 * p.eta;
  if (!(width <= 0.2 + 1e-12)) bad.push_back("2 r1 + L eta = " + fmt(width));
  std::string detail = "2 r1 + L eta = " + fmt(width);
  for (const auto& s : bad) detail += "; " + s;
  return {bad.empty(), detail};
}

// 2 --------------------------------------------------------------------------
Outcome oracles(std::uint64_t seed) {
  constexpr std::uint64_t kReps = 200'000;
  double worst_p = 0.0, worst_d = 0.0;
  std::uint64_t checked = 0, bad = 0;
  auto z = [](const Estimate& e, double target) {
    if (e.stderr_ == 0.0) return e.mean == target ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(e.mean - target) / e.stderr_;
  };
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t k = 1; k <= 8; ++k) {
      const Estimate e = mc_oracle("p_K", {{"K", static_cast<double>(k)}, {"N", static_cast<double>(n)}}, kReps,
                                   derive_seed(seed, "accept.pk", n * 16 + k));
      const double zz = z(e, success_probability(k, n));
      worst_p = std::max(worst_p, zz);
      bad += zz <= 3.0 ? 0 : 1;
      ++checked;
    }
    for (std::size_t u = 1; u <= n; ++u) {
      const Estimate e = mc_oracle("drift", {{"u", static_cast<double>(u)}, {"N", static_cast<double>(n)}}, kReps,
                                   derive_seed(seed, "accept.drift", n * 16 + u));
      const double zz = z(e, drift(u, n));
      worst_d = std::max(worst_d, zz);
      bad += zz <= 3.0 ? 0 : 1;
      ++checked;
    }
  }
  return {bad == 0, std::to_string(checked) + " cells at " + std::to_string(kReps) + " reps, max |z| p_K " +
                        fmt(worst_p) + ", drift " + fmt(worst_d)};
}

// 3 --------------------------------------------------------------------------
Outcome phase1_coverage(std::uint64_t seed) {
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<std::string, ProtocolConfig>> cases{
      {"linear N=2 K=4", [] {
         ProtocolConfig c = config(2, 0.25, "linear");
         c.epsilon = 0.4;
         return c;
       }()},
      {"pathology N=1 K=2", [] {
         ProtocolConfig c = config(1, 0.5, "pathology");
         c.epsilon = 0.02;
         return c;
       }()}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Phase1Battery b = phase1_battery(cases[i].second, 400, derive_seed(seed, "accept.phase1", i));
    const double f = static_cast<double>(b.valid) / static_cast<double>(b.runs);
    const double lo = wilson_interval(b.valid, b.runs).lo;
    const bool ok = f >= 1.0 - b.delta_phase1 && lo >= 1.0 - 2.0 * b.delta_phase1;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += cases[i].first + ": " + frac(b.valid, b.runs) + " valid, Wilson lower " + fmt(lo) + " vs " +
              fmt(1.0 - 2.0 * b.delta_phase1) + ", T0=" + std::to_string(b.t0);
  }
  return {pass, detail};
}

// 4 --------------------------------------------------------------------------
Outcome phase2_refinement(std::uint64_t seed) {
  const SelectionBattery b = selection_battery(suite_phase2_config(), 400, derive_seed(seed, "accept.phase2", 0));
  const double viol = 1.0 - static_cast<double>(b.eps_optimal) / static_cast<double>(b.runs);
  const double budget = b.delta_phase1 + b.delta_phase2;
  const bool widths = b.clean_width_ok == b.clean && b.max_clean_width <= b.epsilon;
  const bool optimal = viol <= budget;
  const bool consensus = b.clean > 0 && b.clean_consensus == b.clean;
  return {widths && optimal && consensus,
          "clean " + frac(b.clean, b.runs) + ", max clean width " + fmt(b.max_clean_width) + " <= " + fmt(b.epsilon) +
              ", eps-optimal " + frac(b.eps_optimal, b.runs) + " (violations " + fmt(viol) + " <= " + fmt(budget) +
              "), consensus " + frac(b.clean_consensus, b.clean) + ", T1=" + std::to_string(b.t1)};
}

// 5 --------------------------------------------------------------------------
Outcome pathology(std::uint64_t seed) {
  ProtocolConfig c = config(1, 0.5, "pathology");
  c.epsilon = 0.02;
  c.dither = false;
  RunOptions o;
  o.aggregate_solo_phase2 = true;
  const SelectionBattery b = selection_battery(c, 1000, derive_seed(seed, "accept.pathology", 0), o, 200);
  std::uint64_t zero = 0;
  for (const auto& [set, count] : b.clean_selected) {
    if (set == std::vector<std::size_t>{0}) zero += count;
  }
  const bool centers = b.center_means.size() == 2 && b.center_means[1] > b.center_means[0];
  const double f = b.clean ? static_cast<double>(zero) / static_cast<double>(b.clean) : 0.0;
  return {centers && b.clean >= 200 && f >= 0.95,
          "center means " + fmt(b.center_means.at(0)) + " < " + fmt(b.center_means.at(1)) + ", selected {0} in " +
              frac(zero, b.clean) + " clean runs, T1=" + std::to_string(b.t1)};
}

// 6 --------------------------------------------------------------------------
// Exact E[T_MC] with N distinct targets. The unseated count is a Markov
// chain; the seated-per-round law comes from throwing u balls into N bins
// and counting free bins hit exactly once.
double exact_seating_time(std::size_t n) {
  std::vector<double> e(n + 1, 0.0);
  for (std::size_t u = 1; u <= n; ++u) {
    // p[a][b]: a free bins hit once, b free bins hit more than once.
    std::vector<std::vector<double>> p(u + 1, std::vector<double>(u + 1, 0.0));
    p[0][0] = 1.0;
    const double big_n = static_cast<double>(n);
    for (std::size_t ball = 0; ball < u; ++ball) {
      std::vector<std::vector<double>> q(u + 1, std::vector<double>(u + 1, 0.0));
      for (std::size_t a = 0; a <= u; ++a) {
        for (std::size_t b = 0; a + b <= u; ++b) {
          const double w = p[a][b];
          if (w == 0.0) continue;
          const double unhit = static_cast<double>(u - a - b);
          if (unhit > 0) q[a + 1][b] += w * unhit / big_n;
          if (a > 0) q[a - 1][b + 1] += w * static_cast<double>(a) / big_n;
          q[a][b] += w * static_cast<double>(b + n - u) / big_n;
        }
      }
      p = std::move(q);
    }
    double stay = 0.0, move = 1.0;
    for (std::size_t a = 0; a <= u; ++a) {
      double pa = 0.0;
      for (std::size_t b = 0; a + b <= u; ++b) pa += p[a][b];
      if (a == 0) {
        stay = pa;
      } else {
        move += pa * e[u - a];
      }
    }
    e[u] = move / (1.0 - stay);
  }
  return e[n];
}

Outcome musical_chairs(std::uint64_t seed) {
  bool pass = true;
  std::string detail;
  for (std::size_t n : {2, 4, 8, 16, 32, 64}) {
    const SeatingBattery s = seating_battery(n, 2000, derive_seed(seed, "accept.seating", n));
    const double hi = s.t_mc.mean + 3.0 * s.t_mc.stderr_;
    const bool ok = hi <= s.time_bound && s.unseated_mass.mean <= s.mass_bound && s.distinct_runs == s.runs;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += "N=" + std::to_string(n) + " T_MC " + fmt(s.t_mc.mean) + " (exact " + fmt(exact_seating_time(n)) +
              ") +3se " + fmt(hi) + " vs " + fmt(s.time_bound) + ", mass " + fmt(s.unseated_mass.mean) + " vs " +
              fmt(s.mass_bound) + ", distinct " + frac(s.distinct_runs, s.runs) + (ok ? "" : " FAIL");
  }
  return {pass, detail};
}

// 7 --------------------------------------------------------------------------
Outcome horizon_independence(std::uint64_t seed) {
  std::uint64_t bad = 0, runs = 0;
  for (std::size_t n : {1, 2}) {
    ProtocolConfig c = config(n, 0.5, "linear");
    c.epsilon = 0.5;
    c.dither = false;
    for (std::uint64_t s = 0; s < 10; ++s) {
      c.seed = derive_seed(seed, "accept.horizon", n * 100 + s);
      std::vector<std::array<std::uint64_t, 3>> seen;
      for (std::uint64_t t : {10'000ULL, 100'000ULL}) {
        c.horizon = t;
        const RunResult r = run_protocol(c);
        seen.push_back({r.plan.phase1.t0, r.plan.epochs.front().params.t1,
                        r.first_t_mc().value_or(std::numeric_limits<std::uint64_t>::max())});
      }
      bad += seen[0] == seen[1] ? 0 : 1;
      ++runs;
    }
  }
  return {bad == 0, "(T0, T1, T_MC) differ in " + frac(bad, runs) + " seeds between T=1e4 and T=1e5"};
}

// 8 --------------------------------------------------------------------------
Outcome collision_freedom(std::uint64_t seed) {
  std::uint64_t clean = 0, post = 0, runs = 0;
  std::vector<ProtocolConfig> partition;
  {
    ProtocolConfig c = config(2, 0.25, "linear");
    c.epsilon = 0.5;
    c.dither = false;
    c.horizon = 200'000;
    partition.push_back(c);
    ProtocolConfig c3 = config(3, 0.5, "linear");
    c3.d = 2;
    c3.epsilon = 0.8;
    c3.horizon = 1'500'000;
    partition.push_back(c3);
  }
  for (std::size_t ci = 0; ci < partition.size(); ++ci) {
    ProtocolConfig c = partition[ci];
    for (std::uint64_t s = 0; s < 25; ++s) {
      c.seed = derive_seed(seed, "accept.partition", ci * 1000 + s);
      const RunResult r = run_protocol(c);
      ++runs;
      if (r.flags.clean()) {
        ++clean;
        post += r.counters.post_seating_collisions;
      }
    }
  }
  ProtocolConfig p = config(3, 0.5, "linear");
  p.d = 2;
  p.packing = PackingSpec{{Point{0.2, 0.2}, Point{0.8, 0.2}, Point{0.2, 0.8}, Point{0.8, 0.8}}, 0.6, 0.3, 0.12};
  p.epsilon = 0.8;
  p.horizon = 1'500'000;
  std::uint64_t inter = 0, total = 0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    p.seed = derive_seed(seed, "accept.packing", s);
    const RunResult r = run_protocol(p);
    inter += r.counters.inter_ball_collisions;
    for (auto v : r.counters.collisions_by_stage) total += v;
  }
  return {clean > 0 && post == 0 && inter == 0,
          "partition: " + std::to_string(post) + " post-seating collisions over " + frac(clean, runs) +
              " clean runs; packing: " + std::to_string(inter) + " inter-ball of " + std::to_string(total) +
              " collisions over 25 runs"};
}

// 9 --------------------------------------------------------------------------
Outcome regret_rate(std::uint64_t) {
  ProtocolConfig c = suite_unique_config();
  c.ucb_constant = 0.5;
  c.ledger_stride = std::uint64_t{1} << 12;
  constexpr int kLo = 12, kHi = 18;
  RunOptions o;
  for (int k = kLo; k <= kHi; ++k) o.phase3_checkpoints.push_back(std::uint64_t{1} << k);
  c.horizon = identification_rounds(c) + (std::uint64_t{1} << kHi) + 2000;

  constexpr std::uint64_t kSeeds = 50;
  std::vector<double> sum(kHi - kLo + 1, 0.0), pseudo(kHi - kLo + 1, 0.0);
  std::uint64_t clean = 0, cost = 0;
  for (std::uint64_t s = 0; s < kSeeds; ++s) {
    c.seed = 1000 + s;
    const RunResult r = run_protocol(c, o);
    clean += r.flags.clean() ? 1 : 0;
    cost = std::max(cost, r.plan.identification_rounds() + r.first_t_mc().value_or(0));
    if (r.checkpoints.size() != sum.size()) return {false, "seed " + std::to_string(c.seed) + " missed a checkpoint"};
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += r.checkpoints[i].regret;
      pseudo[i] += r.checkpoints[i].pseudo_regret;
    }
  }
  std::vector<std::pair<double, double>> series, pseries;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double t = std::exp2(kLo + static_cast<int>(i));
    series.emplace_back(t, sum[i] / kSeeds);
    pseries.emplace_back(t, pseudo[i] / kSeeds);
  }
  const ExponentFit f = fit_exponent(series);
  const ExponentFit fp = fit_exponent(pseries);
  const bool ok = std::abs(f.slope - 2.0 / 3.0) <= 0.08;
  return {ok, "slope " + fmt(f.slope) + " (se " + fmt(f.stderr_) + ", pseudo " + fmt(fp.slope) +
                  ") target 0.6667 +- 0.08, clean " + frac(clean, kSeeds) + ", coordination cost <= " +
                  std::to_string(cost) + " rounds"};
}

// 10 -------------------------------------------------------------------------
Outcome epochic_vs_restart(std::uint64_t) {
  ProtocolConfig c = config(2, 0.25, "constant", {{"value", 0.5}, {"L", 1.0}});
  c.horizon = std::uint64_t{1} << 16;
  c.mode = Mode::EpochicRestart;
  const double restart = static_cast<double>(identification_rounds(c));
  c.mode = Mode::Epochic;
  const double reuse = static_cast<double>(identification_rounds(c));
  const double ratio = restart / reuse;
  return {ratio >= 4.0, "T=2^16: restart " + fmt(restart) + ", reuse " + fmt(reuse) + ", ratio " + fmt(ratio) +
                            " (need >= 4); both modes spend the whole horizon identifying"};
}

// 11 -------------------------------------------------------------------------
Outcome determinism(std::uint64_t seed) {
  ProtocolConfig c = config(2, 0.5, "linear");
  c.epsilon = 0.5;
  c.dither = false;
  c.horizon = 200'000;
  c.seed = seed;
  const fs::path root = fs::temp_directory_path() / ("lipmab_accept_" + std::to_string(seed));
  fs::remove_all(root);
  auto run_into = [&](const std::string& name) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    std::ofstream trace(dir / "trace.csv", std::ios::binary);
    CsvTraceWriter w(trace, c.d);
    RunOptions o;
    o.sink = &w;
    const RunResult r = run_protocol(c, o);
    std::ofstream(dir / "summary.json", std::ios::binary) << summary_json(c, r);
  };
  run_into("a");
  run_into("b");
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  std::string detail;
  bool same = true;
  for (const char* f : {"trace.csv", "summary.json"}) {
    const std::string a = slurp(root / "a" / f);
    const std::string b = slurp(root / "b" / f);
    same = same && !a.empty() && a == b;
    detail += std::string(detail.empty() ? "" : ", ") + f + " " + std::to_string(a.size()) + " bytes " +
              (a == b ? "identical" : "DIFFER");
  }
  fs::remove_all(root);
  return {same, detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome(std::uint64_t)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "formula exactness", 1, formulas},
      {2, "oracle agreement", 300, oracles},
      {3, "phase I bracket coverage", 600, phase1_coverage},
      {4, "phase II refinement", 900, phase2_refinement},
      {5, "pathology resolution", 600, pathology},
      {6, "musical chairs", 300, musical_chairs},
      {7, "horizon-independent coordination", 120, horizon_independence},
      {8, "post-seating collision freedom", 600, collision_freedom},
      {9, "regret rate", 2700, regret_rate},
      {10, "epochic vs restart", 1200, epochic_vs_restart},
      {11, "determinism", 60, determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one pass/fail line each"};
  int only = 0;
  std::uint64_t seed = 20261016;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(seed);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << fmt(secs) << " s" << (in_time ? "" : ", over the " + fmt(c.budget_s) + " s budget") << ")"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
