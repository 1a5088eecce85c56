#include "lipmab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "json.hpp"
#include "lipmab/env.hpp"
#include "lipmab/errors.hpp"
#include "lipmab/instances.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/phase2.hpp"
#include "lipmab/phase3.hpp"
#include "lipmab/plan.hpp"
#include "lipmab/rng.hpp"
#include "lipmab/seating.hpp"

namespace lipmab {

bool Estimate::agrees(double target, double k) const noexcept {
  if (stderr_ == 0.0) return mean == target;
  return std::abs(mean - target) <= k * stderr_;
}

namespace {

// Running mean and variance (Welford).
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  Estimate estimate() const { return Estimate{mean, stderr_of_mean(), n}; }
};

std::size_t param_count(const std::map<std::string, double>& p, const char* key) {
  auto it = p.find(key);
  if (it == p.end() || !(it->second >= 1.0) || it->second != std::floor(it->second)) {
    throw DomainError(std::string("mc_oracle needs a positive integer '") + key + "'");
  }
  return static_cast<std::size_t>(it->second);
}

}  // namespace

Estimate mc_oracle(std::string_view tag, const std::map<std::string, double>& params, std::uint64_t reps,
                   std::uint64_t seed) {
  if (reps < 100) throw DomainError("mc_oracle needs at least 100 reps");
  Rng rng(seed);
  Moments m;
  if (tag == "p_K") {
    const std::size_t k = param_count(params, "K");
    const std::size_t n = param_count(params, "N");
    for (std::uint64_t r = 0; r < reps; ++r) {
      bool ok = rng.index(k) == 0;
      for (std::size_t j = 1; j < n; ++j) ok = (rng.index(k) != 0) && ok;
      m.add(ok ? 1.0 : 0.0);
    }
  } else if (tag == "drift") {
    const std::size_t u = param_count(params, "u");
    const std::size_t n = param_count(params, "N");
    if (u > n) throw DomainError("mc_oracle drift needs u <= N");
    // Seated players hold cells u..N-1; the u unseated ones pick among all N.
    std::vector<std::size_t> pick(u);
    std::vector<std::uint32_t> hits(n);
    for (std::uint64_t r = 0; r < reps; ++r) {
      std::fill(hits.begin(), hits.end(), 0);
      for (std::size_t j = 0; j < u; ++j) {
        pick[j] = static_cast<std::size_t>(rng.index(n));
        ++hits[pick[j]];
      }
      int seated = 0;
      for (std::size_t j = 0; j < u; ++j) seated += (pick[j] < u && hits[pick[j]] == 1) ? 1 : 0;
      m.add(seated);
    }
  } else if (tag == "phase2_success") {
    const std::size_t cells = param_count(params, "M");
    const std::size_t probes = param_count(params, "P");
    const std::size_t n = param_count(params, "N");
    for (std::uint64_t r = 0; r < reps; ++r) {
      bool ok = rng.index(cells) == 0;
      ok = (rng.index(probes) == 0) && ok;
      for (std::size_t j = 1; j < n; ++j) {
        ok = (rng.index(cells) != 0) && ok;
        rng.index(probes);
      }
      m.add(ok ? 1.0 : 0.0);
    }
  } else {
    throw DomainError("mc_oracle: unknown tag '" + std::string(tag) + "'");
  }
  return m.estimate();
}

ExponentFit fit_exponent(std::span<const std::pair<double, double>> series) {
  ExponentFit f;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : series) {
    if (x > 0.0 && y > 0.0) {
      pts.emplace_back(std::log(x), std::log(y));
    } else {
      ++f.excluded;
    }
  }
  f.used = pts.size();
  if (pts.size() < 2) throw DomainError("fit_exponent needs at least two positive points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw DomainError("fit_exponent needs distinct x values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (pts.size() > 2) {
    double sse = 0.0;
    for (const auto& [x, y] : pts) {
      const double e = y - f.intercept - f.slope * x;
      sse += e * e;
    }
    f.stderr_ = std::sqrt(sse / static_cast<double>(pts.size() - 2) / sxx);
  }
  return f;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
  if (n == 0) return {};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return Interval{std::max(0.0, center - half), std::min(1.0, center + half)};
}

double binomial_gof_pvalue(std::span<const std::uint64_t> samples, std::uint64_t n, double p) {
  if (samples.empty()) throw DomainError("gof needs samples");
  const boost::math::binomial_distribution<double> law(static_cast<double>(n), p);
  const double total = static_cast<double>(samples.size());
  std::vector<double> observed(n + 1, 0.0);
  for (std::uint64_t s : samples) {
    if (s > n) throw DomainError("gof sample above n");
    observed[s] += 1.0;
  }
  // Merge consecutive support points until each bin expects at least 5.
  std::vector<double> exp_bins;
  std::vector<double> obs_bins;
  double e = 0.0;
  double o = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    e += total * boost::math::pdf(law, static_cast<double>(k));
    o += observed[k];
    if (e >= 5.0) {
      exp_bins.push_back(e);
      obs_bins.push_back(o);
      e = 0.0;
      o = 0.0;
    }
  }
  if (exp_bins.empty()) return 1.0;
  exp_bins.back() += e;
  obs_bins.back() += o;
  if (exp_bins.size() < 2) return 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < exp_bins.size(); ++i) {
    const double diff = obs_bins[i] - exp_bins[i];
    stat += diff * diff / exp_bins[i];
  }
  const boost::math::chi_squared_distribution<double> chi(static_cast<double>(exp_bins.size() - 1));
  return boost::math::cdf(boost::math::complement(chi, stat));
}

std::string report_json(std::span<const CheckResult> checks) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const CheckResult& c : checks) {
    nlohmann::ordered_json j;
    j["check_id"] = c.check_id;
    j["paper_ref"] = c.paper_ref;
    j["observed"] = c.observed;
    j["bound"] = c.bound;
    j["tolerance"] = c.tolerance;
    j["pass"] = c.pass;
    if (!c.detail.empty()) j["detail"] = c.detail;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

Phase1Battery phase1_battery(ProtocolConfig config, std::uint64_t runs, std::uint64_t seed0) {
  Phase1Battery b;
  config.horizon = std::uint64_t{1} << 50;
  RunOptions opt;
  opt.stop_after = StopAfter::Phase1;
  for (std::uint64_t i = 0; i < runs; ++i) {
    config.seed = seed0 + i;
    const RunResult r = run_protocol(config, opt);
    if (r.phase1.empty()) throw InternalError("phase I did not complete");
    const Phase1Record& p = r.phase1.front();
    ++b.runs;
    b.valid += p.valid ? 1 : 0;
    b.counts_ok += p.counts_ok ? 1 : 0;
    b.means_ok += p.means_ok ? 1 : 0;
    b.first_counts.push_back(p.counts[0][0]);
    if (b.center_means.empty()) {
      b.t0 = r.plan.phase1.t0;
      b.p_k = success_probability(r.plan.k_cells, r.plan.n_players);
      b.delta_phase1 = r.plan.budget.delta_phase1;
      b.center_means.assign(r.plan.k_cells, 0.0);
    }
    for (const auto& means : p.means) {
      for (std::size_t c = 0; c < means.size(); ++c) b.center_means[c] += means[c];
    }
  }
  const double denom = static_cast<double>(runs) * static_cast<double>(config.n_players);
  for (double& v : b.center_means) v /= denom;
  return b;
}

SelectionBattery selection_battery(ProtocolConfig config, std::uint64_t runs, std::uint64_t seed0,
                                   const RunOptions& base, std::uint64_t clean_target) {
  SelectionBattery b;
  RunOptions opt = base;
  opt.stop_after = StopAfter::Selection;
  Moments rate;
  for (std::uint64_t i = 0; i < runs; ++i) {
    config.seed = seed0 + i;
    const RunResult r = run_protocol(config, opt);
    if (r.selections.empty()) throw InternalError("no selection was made");
    const SelectionRecord& s = r.selections.front();
    const bool clean = r.flags.clean();
    if (b.runs == 0) {
      b.epsilon = s.epsilon;
      b.epsilon_int = s.epsilon_int;
      b.delta_phase1 = r.plan.budget.delta_phase1;
      b.delta_phase2 = r.plan.budget.delta_phase2;
      b.t1 = s.params.t1;
      b.q = s.params.q;
      b.center_means.assign(r.plan.k_cells, 0.0);
    }
    ++b.runs;
    b.coverage += s.coverage ? 1 : 0;
    b.eps_optimal += s.eps_optimal ? 1 : 0;
    for (const auto& means : r.phase1.front().means) {
      for (std::size_t c = 0; c < means.size(); ++c) b.center_means[c] += means[c];
    }
    for (std::size_t j = 0; j < s.successes.size(); ++j) {
      rate.add(static_cast<double>(s.successes[j]) /
               (static_cast<double>(s.probes[j]) * static_cast<double>(s.params.t1)));
    }
    if (clean) {
      ++b.clean;
      b.clean_eps_optimal += s.eps_optimal ? 1 : 0;
      b.clean_consensus += s.consensus ? 1 : 0;
      b.clean_width_ok += s.max_width <= s.epsilon_int + 1e-12 ? 1 : 0;
      b.max_clean_width = std::max(b.max_clean_width, s.max_width);
      ++b.clean_selected[s.selected.front()];
      if (clean_target > 0 && b.clean >= clean_target) break;
    }
  }
  const double denom = static_cast<double>(b.runs) * static_cast<double>(config.n_players);
  for (double& v : b.center_means) v /= denom;
  b.success_rate = rate.mean;
  b.success_stderr = rate.stderr_of_mean();
  return b;
}

SeatingBattery seating_battery(std::size_t n_players, std::uint64_t runs, std::uint64_t seed0) {
  SeatingBattery b;
  b.n_players = n_players;
  b.runs = runs;
  b.time_bound = expected_time_bound(n_players).sum_inverse_drift;
  b.mass_bound = unseated_mass_bound(n_players);
  std::vector<std::size_t> targets(n_players);
  for (std::size_t i = 0; i < n_players; ++i) targets[i] = 3 * i + 1;
  Moments t;
  Moments mass;
  for (std::uint64_t i = 0; i < runs; ++i) {
    const SeatingRun s = run_until_seated(targets, derive_seed(seed0, "seating.battery", i));
    t.add(static_cast<double>(s.t_mc));
    double u = 0.0;
    for (std::size_t v : s.unseated_trace) u += static_cast<double>(v);
    mass.add(u);
    std::vector<std::size_t> a = s.assignment;
    std::sort(a.begin(), a.end());
    b.distinct_runs += a == targets ? 1 : 0;
  }
  b.t_mc = t.estimate();
  b.unseated_mass = mass.estimate();
  return b;
}

std::vector<std::pair<double, double>> phase3_curve(const Instance& instance, double h, std::size_t cell,
                                                    double ucb_constant, int k_lo, int k_hi,
                                                    std::uint64_t seeds, std::uint64_t seed0) {
  if (k_lo < 0 || k_hi < k_lo || k_hi > 40) throw DomainError("phase3_curve needs 0 <= k_lo <= k_hi <= 40");
  std::vector<double> sum(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
  const Arena arena = Arena::from_partition(PartitionGeometry(instance.dim(), h));
  const double sup = cell_supremum(instance, arena, cell).value;
  const std::uint64_t last = std::uint64_t{1} << k_hi;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    ZoomLearner z(arena.region(cell), instance.lipschitz(), h, ucb_constant);
    Rng rng(derive_seed(seed0, "phase3.rewards", s));
    double regret = 0.0;
    std::size_t next = 0;
    for (std::uint64_t t = 1; t <= last; ++t) {
      const std::size_t i = z.choose();
      const double mu = instance.mean(z.point(i));
      z.update(i, PlayerOutcome{false, rng.bernoulli(mu) ? 1.0 : 0.0});
      regret += sup - mu;
      if (t == (std::uint64_t{1} << (k_lo + static_cast<int>(next)))) {
        sum[next] += regret;
        ++next;
      }
    }
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    out.emplace_back(std::ldexp(1.0, k_lo + static_cast<int>(i)), sum[i] / static_cast<double>(seeds));
  }
  return out;
}

Instance suite_cone_instance() {
  auto mu = std::make_shared<ConeField>(0.0, std::vector<Cone>{Cone{Point{0.3173}, 0.9, 6.0}});
  InstanceSpec spec{"cone", {{"apex", 0.3173}, {"height", 0.9}, {"L", 6.0}}, {}, 0};
  return Instance(spec, 1, 6.0, std::move(mu));
}

std::uint64_t identification_rounds(const ProtocolConfig& config) {
  const World w = build_world(config);
  return make_plan(config, w.arena, w.instance.lipschitz()).identification_rounds();
}

// ---------------------------------------------------------------------------
// Verify suite

namespace {

struct Sizes {
  std::uint64_t tiling_points;
  std::uint64_t reward_reps;
  std::uint64_t phase1_runs;
  std::uint64_t phase2_runs;
  std::uint64_t unique_runs;
  std::uint64_t drift_reps;
  std::uint64_t seating_runs;
  std::uint64_t phase3_seeds;
  std::uint64_t full_runs;
  std::uint64_t instance_points;
};

Sizes sizes_for(SuiteLevel level) {
  if (level == SuiteLevel::Full) {
    return Sizes{1'000'000, 1'000'000, 400, 400, 100, 100'000, 2000, 50, 50, 100'000};
  }
  return Sizes{100'000, 100'000, 100, 40, 10, 20'000, 300, 10, 10, 10'000};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CheckResult check(std::string id, std::string claim, double observed, double bound, double tolerance, bool pass,
                  std::string detail = {}) {
  return CheckResult{std::move(id), std::move(claim), observed, bound, tolerance, pass, std::move(detail)};
}

ProtocolConfig base_config(std::size_t n, int d, double h, InstanceSpec inst) {
  ProtocolConfig c;
  c.n_players = n;
  c.d = d;
  c.h = h;
  c.instance = std::move(inst);
  c.delta_sys = 0.1;
  return c;
}

InstanceSpec kind(const std::string& k, std::map<std::string, double> params = {}) {
  InstanceSpec s;
  s.kind = k;
  s.params = std::move(params);
  return s;
}

}  // namespace

ProtocolConfig suite_phase2_config() {
  ProtocolConfig c = base_config(2, 1, 0.25, kind("linear"));
  c.epsilon = 0.4;
  c.dither = true;
  c.horizon = std::uint64_t{1} << 40;
  return c;
}

ProtocolConfig suite_unique_config() {
  ProtocolConfig c = base_config(2, 1, 0.25, kind("spike", {{"m", 2}, {"c0", 0.5}, {"L", 2.4}}));
  c.epsilon = 0.07;
  c.dither = false;
  c.horizon = std::uint64_t{1} << 40;
  return c;
}

std::vector<CheckResult> verify_suite(SuiteLevel level, std::uint64_t seed) {
  const Sizes z = sizes_for(level);
  std::vector<CheckResult> out;

  // env ----------------------------------------------------------------------
  {
    Rng rng(derive_seed(seed, "suite.tiling", 0));
    std::uint64_t bad = 0;
    std::uint64_t tested = 0;
    for (int d = 1; d <= 3; ++d) {
      for (double h : {0.3, 0.25}) {
        const PartitionGeometry g(d, h);
        const std::size_t m = g.per_axis();
        auto consistent = [&](const Point& x) {
          const std::size_t c = g.cell_of(x);
          if (c >= g.size()) return false;
          const CellCoords cc = g.coords(c);
          const Box box = g.cell_box(c);
          for (int k = 0; k < d; ++k) {
            const std::size_t i = cc[static_cast<std::size_t>(k)];
            const bool last = i + 1 == m;
            if (!(x[k] >= g.lower(i) && (x[k] < g.upper(i) || (last && x[k] <= 1.0)))) return false;
            if (!(x[k] >= box.lo[k] && x[k] <= box.hi[k])) return false;
          }
          return true;
        };
        for (std::uint64_t t = 0; t < z.tiling_points / 6; ++t) {
          Point x(d);
          for (int k = 0; k < d; ++k) x[k] = rng.uniform01();
          bad += consistent(x) ? 0 : 1;
          ++tested;
        }
        for (std::size_t i = 0; i <= m; ++i) {
          Point x(d, std::min(1.0, g.lower(std::min(i, m - 1)) + (i == m ? 1.0 : 0.0)));
          bad += consistent(x) ? 0 : 1;
          ++tested;
        }
      }
    }
    out.push_back(check("env.partition_tiling", "cell_of is total and agrees with the cell boxes",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0, std::to_string(tested) + " points"));
  }
  {
    Rng rng(derive_seed(seed, "suite.symmetry", 0));
    const PartitionGeometry g(2, 0.5);
    std::uint64_t bad = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.index(5));
      std::vector<Point> a(n, Point(2));
      for (auto& p : a) {
        p[0] = rng.uniform01();
        p[1] = rng.uniform01();
      }
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
      std::vector<Point> b(n);
      for (std::size_t i = 0; i < n; ++i) b[i] = a[perm[i]];
      for (const CollisionModel& model : {CollisionModel::partition(), CollisionModel::distance_threshold(0.2)}) {
        std::vector<std::uint8_t> ma;
        std::vector<std::uint8_t> mb;
        collision_mask(model, &g, a, ma);
        collision_mask(model, &g, b, mb);
        for (std::size_t i = 0; i < n; ++i) bad += mb[i] == ma[perm[i]] ? 0 : 1;
      }
    }
    out.push_back(check("env.collision_symmetry", "relabeling players permutes outcomes identically",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0, "2000 random profiles, both models"));
  }
  {
    const PartitionGeometry g(1, 0.5);
    const Instance inst = linear_instance(1);
    Rng rng(derive_seed(seed, "suite.exact", 0));
    std::uint64_t bad = 0;
    for (int i = 0; i <= 8; ++i) {
      for (int j = 0; j <= 8; ++j) {
        const double x = i / 8.0;
        const double y = j / 8.0;
        const int cx = std::min(1, static_cast<int>(std::floor(x / 0.5)));
        const int cy = std::min(1, static_cast<int>(std::floor(y / 0.5)));
        const bool same = cx == cy;
        const std::vector<Point> a{Point{x}, Point{y}};
        const auto o = resolve_round(CollisionModel::partition(), &g, inst, a, rng);
        bad += (o[0].collided == same && o[1].collided == same) ? 0 : 1;
      }
    }
    out.push_back(check("env.partition_collision_exactness", "group-by-cell brute force equals resolve_round",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0, "9x9 grid, 2 players, K=2"));
  }
  {
    const Instance inst = linear_instance(1);
    Rng rng(derive_seed(seed, "suite.reward", 0));
    double worst = 0.0;
    for (double x : {0.1, 0.5, 0.9}) {
      double s = 0.0;
      for (std::uint64_t r = 0; r < z.reward_reps; ++r) s += sample_reward(inst, Point{x}, rng);
      const double n = static_cast<double>(z.reward_reps);
      const double sd = std::sqrt(x * (1.0 - x) / n);
      worst = std::max(worst, std::abs(s / n - x) / sd);
    }
    out.push_back(check("env.reward_unbiasedness", "empirical reward mean converges to mu(x)", worst, 3.0, 0.0,
                        worst <= 3.0, "max |z| over x in {0.1,0.5,0.9}"));
  }
  {
    std::uint64_t bad = 0;
    for (int d = 1; d <= 2; ++d) {
      for (std::uint64_t s = 1; s <= 5; ++s) {
        const Instance inst = random_cone_instance(d, 3, s);
        const Arena arena = Arena::from_partition(PartitionGeometry(d, 0.25));
        const auto sup = all_suprema(inst, arena);
        double prev = -1.0;
        for (std::size_t n = 1; n <= arena.size(); ++n) {
          const double v = opt_benchmark(sup, n);
          bad += v >= prev ? 0 : 1;
          prev = v;
        }
      }
    }
    out.push_back(check("env.benchmark_monotonicity", "opt_benchmark is nondecreasing in N",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0));
  }

  // phase1 -------------------------------------------------------------------
  {
    const ProtocolConfig c = base_config(2, 1, 0.25, kind("linear"));
    const Phase1Battery b = phase1_battery(c, z.phase1_runs, derive_seed(seed, "suite.phase1", 0));
    const double n = static_cast<double>(b.runs);
    const double fc = static_cast<double>(b.counts_ok) / n;
    const double fm = static_cast<double>(b.means_ok) / n;
    const double fv = static_cast<double>(b.valid) / n;
    const double d1 = b.delta_phase1;
    out.push_back(check("phase1.count_concentration", "success counts within (1 +- 1/2) T0 p_K for all players and cells",
                        fc, 1.0 - d1 / 2.0, 0.0, fc >= 1.0 - d1 / 2.0,
                        "Wilson 95% = [" + fmt(wilson_interval(b.counts_ok, b.runs).lo) + ", " +
                            fmt(wilson_interval(b.counts_ok, b.runs).hi) + "], runs " + std::to_string(b.runs)));
    out.push_back(check("phase1.mean_concentration", "center means within r0 for all players and cells", fm,
                        1.0 - d1 / 2.0, 0.0, fm >= 1.0 - d1 / 2.0,
                        "Wilson 95% lower " + fmt(wilson_interval(b.means_ok, b.runs).lo)));
    out.push_back(check("phase1.bracket_validity", "LCB <= cell supremum <= UCB for all players and cells", fv,
                        1.0 - d1, 0.0, fv >= 1.0 - d1, "Wilson 95% lower " + fmt(wilson_interval(b.valid, b.runs).lo)));
    const double pv = binomial_gof_pvalue(b.first_counts, b.t0, b.p_k);
    out.push_back(check("phase1.distributional_exactness", "success counts are Binomial(T0, p_K)", pv, 0.01, 0.0,
                        pv >= 0.01, "chi-square p-value, player 0 cell 0, T0=" + std::to_string(b.t0)));
  }

  // phase2 -------------------------------------------------------------------
  const SelectionBattery pa =
      selection_battery(suite_phase2_config(), z.phase2_runs, derive_seed(seed, "suite.phase2", 0));
  {
    const double f = static_cast<double>(pa.coverage) / static_cast<double>(pa.runs);
    out.push_back(check("phase2.coverage", "every active probe gets at least b successes", f,
                        1.0 - pa.delta_phase2 / 2.0, 0.0, f >= 1.0 - pa.delta_phase2 / 2.0,
                        "runs " + std::to_string(pa.runs) + ", T1=" + std::to_string(pa.t1)));
  }
  {
    ProtocolConfig c = base_config(2, 1, 0.25, kind("constant", {{"value", 0.5}, {"L", 1.0}}));
    c.epsilon = 0.3;
    c.dither = false;
    c.horizon = std::uint64_t{1} << 40;
    const SelectionBattery b = selection_battery(c, z.unique_runs, derive_seed(seed, "suite.success", 0));
    const Estimate o = mc_oracle("phase2_success", {{"M", 2}, {"P", 3}, {"N", 2}}, 200'000,
                                 derive_seed(seed, "suite.success.oracle", 0));
    const double q_small = 1.0 / 12.0;
    const bool ok = b.success_rate >= b.q - 3.0 * b.success_stderr && o.mean >= q_small - 3.0 * o.stderr_;
    out.push_back(check("phase2.per_round_success", "per-triple success frequency is at least q", b.success_rate, b.q,
                        3.0 * b.success_stderr, ok,
                        "oracle M=2 P=3 N=2: " + fmt(o.mean) + " vs q " + fmt(q_small) + " (se " + fmt(o.stderr_) + ")"));
  }
  {
    double worst = -1.0;
    for (double eps : {0.02, 0.05, 0.1, 0.2, 0.5}) {
      for (double lip : {0.5, 1.0, 3.0, 12.5}) {
        for (std::size_t np : {1, 20, 1000}) {
          const Phase2Params p = phase2_params(eps, lip, 0.05, np, 2, 1, 2);
          worst = std::max(worst, 2.0 * p.r1 + lip * p.eta - eps);
        }
      }
    }
    const bool ok = worst <= 1e-12 && pa.clean_width_ok == pa.clean;
    out.push_back(check("phase2.width", "refined width <= 2 r1 + L eta <= epsilon", worst, 0.0, 1e-12, ok,
                        "max clean width " + fmt(pa.max_clean_width) + " vs epsilon_int " + fmt(pa.epsilon_int)));
  }
  {
    const double viol = 1.0 - static_cast<double>(pa.eps_optimal) / static_cast<double>(pa.runs);
    const double bound = pa.delta_phase1 + pa.delta_phase2;
    out.push_back(check("phase2.eps_optimality", "selected cells are epsilon-optimal", viol, bound, 0.0,
                        viol <= bound && pa.clean_eps_optimal == pa.clean,
                        "clean runs " + std::to_string(pa.clean)));
  }
  {
    const SelectionBattery u = selection_battery(suite_unique_config(), z.unique_runs, derive_seed(seed, "suite.unique", 0));
    const double f1 = pa.clean ? static_cast<double>(pa.clean_consensus) / static_cast<double>(pa.clean) : 0.0;
    const double f2 = u.clean ? static_cast<double>(u.clean_consensus) / static_cast<double>(u.clean) : 0.0;
    out.push_back(check("phase2.consensus", "all players select the same set on clean runs", std::min(f1, f2), 1.0,
                        0.0, pa.clean > 0 && u.clean > 0 && f1 == 1.0 && f2 == 1.0,
                        "dither: " + std::to_string(pa.clean_consensus) + "/" + std::to_string(pa.clean) +
                            ", epsilon-unique: " + std::to_string(u.clean_consensus) + "/" + std::to_string(u.clean)));
  }
  {
    Rng rng(derive_seed(seed, "suite.argmax", 0));
    std::uint64_t bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t k = 2 + static_cast<std::size_t>(rng.index(7));
      const std::size_t n = 1 + static_cast<std::size_t>(rng.index(k));
      Bracket b;
      for (std::size_t i = 0; i < k; ++i) {
        b.cells.push_back(i);
        b.lcb.push_back(static_cast<double>(rng.index(512)) / 1024.0);
        b.ucb.push_back(1.0);
      }
      const DitherTable dt = dither_table(k, 0.25);
      for (double shift : {0.25, -0.125, 0.5}) {
        Bracket s = b;
        for (double& v : s.lcb) v += shift;
        bad += select_top_n(b, nullptr, n).cells == select_top_n(s, nullptr, n).cells ? 0 : 1;
        bad += select_top_n(b, &dt, n).cells == select_top_n(s, &dt, n).cells ? 0 : 1;
      }
    }
    out.push_back(check("phase2.argmax_invariance", "a common LCB shift leaves the selection unchanged",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0));
  }

  // seating ------------------------------------------------------------------
  {
    Rng pick(derive_seed(seed, "suite.drift", 0));
    double worst = 0.0;
    for (std::size_t n = 2; n <= 8; ++n) {
      std::vector<std::size_t> targets(n);
      for (std::size_t i = 0; i < n; ++i) targets[i] = i;
      for (std::size_t u = 1; u <= n; ++u) {
        std::vector<std::optional<std::size_t>> seats;
        for (std::size_t j = 0; j < n; ++j) {
          seats.push_back(j < u ? std::nullopt : std::optional<std::size_t>(j));
        }
        std::vector<Rng> rngs;
        for (std::size_t j = 0; j < n; ++j) rngs.emplace_back(pick.next());
        Moments m;
        for (std::uint64_t r = 0; r < z.drift_reps; ++r) {
          SeatingState st(targets, seats);
          m.add(static_cast<double>(st.mc_round(rngs).newly_seated));
        }
        const double target = drift(u, n);
        const double se = m.stderr_of_mean();
        const double zz = se > 0.0 ? std::abs(m.mean - target) / se : (m.mean == target ? 0.0 : 1e9);
        worst = std::max(worst, zz);
      }
    }
    out.push_back(check("seating.drift_exactness", "one-round seated count matches drift(u, N)", worst, 3.0, 0.0,
                        worst <= 3.0, "max |z| over 1 <= u <= N <= 8"));
  }
  {
    std::uint64_t bad = 0;
    for (std::size_t n = 2; n <= 128; ++n) {
      for (std::size_t u = 1; u < n; ++u) bad += drift(u + 1, n) > drift(u, n) ? 0 : 1;
    }
    out.push_back(check("seating.monotonicity", "drift(u+1, N) > drift(u, N)", static_cast<double>(bad), 0.0, 0.0,
                        bad == 0, "1 <= u < N <= 128"));
  }
  std::vector<SeatingBattery> seat;
  for (std::size_t n : {2, 4, 8, 16, 32, 64}) {
    seat.push_back(seating_battery(n, z.seating_runs, derive_seed(seed, "suite.seating", n)));
  }
  {
    std::uint64_t bad = 0;
    for (const auto& s : seat) bad += s.runs - s.distinct_runs;
    out.push_back(check("seating.distinctness", "seated cells equal the target set", static_cast<double>(bad), 0.0,
                        0.0, bad == 0));
  }
  {
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& s : seat) {
      const double x = static_cast<double>(s.n_players);
      sx += x;
      sy += s.t_mc.mean;
      sxx += x * x;
      sxy += x * s.t_mc.mean;
    }
    const double k = static_cast<double>(seat.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double cap = std::numbers::e * std::numbers::pi * std::numbers::pi / 6.0;
    bool trend = true;
    for (std::size_t i = 0; i + 1 < seat.size(); ++i) {
      if (seat[i].n_players < 8) continue;
      const double a = seat[i].t_mc.mean / static_cast<double>(seat[i].n_players);
      const double b = seat[i + 1].t_mc.mean / static_cast<double>(seat[i + 1].n_players);
      const double sa = seat[i].t_mc.stderr_ / static_cast<double>(seat[i].n_players);
      const double sb = seat[i + 1].t_mc.stderr_ / static_cast<double>(seat[i + 1].n_players);
      if (b > a + 3.0 * std::hypot(sa, sb)) trend = false;
    }
    out.push_back(check("seating.linearity", "mean seating time grows at most linearly in N", slope, cap, 0.0,
                        slope <= cap && trend, trend ? "T_MC/N non-increasing beyond N=8" : "T_MC/N increased beyond N=8"));
  }

  // phase3 -------------------------------------------------------------------
  {
    const auto curve = phase3_curve(suite_cone_instance(), 0.25, 1, 0.5, 10, 17, z.phase3_seeds,
                                    derive_seed(seed, "suite.phase3", 0));
    const ExponentFit f = fit_exponent(curve);
    out.push_back(check("phase3.regret_rate", "in-cell regret grows like T^(2/3) for d=1", f.slope, 2.0 / 3.0, 0.08,
                        std::abs(f.slope - 2.0 / 3.0) <= 0.08,
                        "T' = 2^10..2^17, slope se " + fmt(f.stderr_) + ", seeds " + std::to_string(z.phase3_seeds)));
  }
  {
    double worst = -1.0;
    const PartitionGeometry g(1, 0.25);
    const Arena arena = Arena::from_partition(g);
    std::vector<Instance> insts;
    insts.push_back(linear_instance(1));
    insts.push_back(spike_instance(1, 0.25, 1, 2, 0.5, {0, 1, 2, 3}, 2.4, derive_seed(seed, "suite.disc", 0)).instance);
    insts.push_back(random_cone_instance(1, 3, derive_seed(seed, "suite.disc", 1)));
    for (const Instance& inst : insts) {
      for (std::size_t c = 0; c < arena.size(); ++c) {
        const double sup = cell_supremum(inst, arena, c).value;
        for (int e = 0; e <= 20; ++e) {
          const auto grid = epoch_grid(arena.region(c), e, inst.lipschitz(), 0.25, 1);
          double best = -1.0;
          for (const Point& p : grid) best = std::max(best, inst.mean(p));
          const double allowed = inst.lipschitz() * 0.25 / (2.0 * static_cast<double>(grid.size()));
          worst = std::max(worst, sup - best - allowed);
        }
      }
    }
    out.push_back(check("phase3.discretization", "best grid point is within L h sqrt(d) / (2 n_e) of the supremum",
                        worst, 0.0, 1e-12, worst <= 1e-12, "max excess over epochs 0..20"));
  }
  {
    auto run_once = [&](std::uint64_t s) {
      const Arena arena = Arena::from_partition(PartitionGeometry(1, 0.25));
      const Instance inst = random_cone_instance(1, 2, 7);
      ZoomLearner zl(arena.region(1), inst.lipschitz(), 0.25);
      Rng rng(s);
      std::vector<std::size_t> seq;
      for (int t = 0; t < 5000; ++t) {
        const std::size_t i = zl.choose();
        seq.push_back(i);
        zl.update(i, PlayerOutcome{false, rng.bernoulli(inst.mean(zl.point(i))) ? 1.0 : 0.0});
      }
      return seq;
    };
    const bool same = run_once(11) == run_once(11);
    ProtocolConfig c = base_config(2, 1, 0.5, kind("linear"));
    c.epsilon = 0.5;
    c.dither = false;
    c.horizon = 20'000;
    c.seed = 5;
    auto csv = [&]() {
      std::ostringstream os;
      CsvTraceWriter w(os, 1);
      RunOptions o;
      o.sink = &w;
      run_protocol(c, o);
      return os.str();
    };
    const bool same_run = csv() == csv();
    out.push_back(check("phase3.determinism", "identical seeds give identical traces", same && same_run ? 1.0 : 0.0,
                        1.0, 0.0, same && same_run));
  }

  // orchestrator -------------------------------------------------------------
  {
    ProtocolConfig c = base_config(2, 1, 0.5, kind("linear"));
    c.epsilon = 0.5;
    c.dither = false;
    std::uint64_t bad = 0;
    const std::uint64_t seeds = level == SuiteLevel::Full ? 5 : 2;
    for (std::uint64_t s = 0; s < seeds; ++s) {
      c.seed = derive_seed(seed, "suite.horizon", s);
      std::array<std::uint64_t, 3> ref{};
      for (std::uint64_t t : {10'000ULL, 100'000ULL}) {
        c.horizon = t;
        const RunResult r = run_protocol(c);
        const std::array<std::uint64_t, 3> v{r.plan.phase1.t0, r.plan.epochs.front().params.t1,
                                             r.first_t_mc().value_or(std::numeric_limits<std::uint64_t>::max())};
        if (t == 10'000) {
          ref = v;
        } else {
          bad += v == ref ? 0 : 1;
        }
      }
    }
    out.push_back(check("orchestrator.horizon_independence", "T0, T1 and T_MC do not depend on T",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0, "T in {1e4, 1e5}"));
  }
  {
    std::uint64_t post = 0;
    std::uint64_t clean = 0;
    double worst_identity = 0.0;
    double worst_replay = 0.0;
    std::vector<ProtocolConfig> configs;
    {
      ProtocolConfig c = base_config(2, 1, 0.25, kind("linear"));
      c.epsilon = 0.5;
      c.dither = false;
      c.horizon = 200'000;
      configs.push_back(c);
      ProtocolConfig c3 = base_config(3, 2, 0.5, kind("linear"));
      c3.epsilon = 0.8;
      c3.dither = true;
      c3.horizon = 1'500'000;
      configs.push_back(c3);
    }
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      ProtocolConfig c = configs[ci];
      for (std::uint64_t s = 0; s < z.full_runs / 2; ++s) {
        c.seed = derive_seed(seed, "suite.full", ci * 1000 + s);
        RunTrace trace;
        RunOptions o;
        const bool replay = s == 0;
        if (replay) o.sink = &trace;
        const RunResult r = run_protocol(c, o);
        if (r.flags.clean()) {
          ++clean;
          post += r.counters.post_seating_collisions;
        }
        const double total = r.ledger.total_regret();
        worst_identity = std::max(worst_identity, std::abs(r.ledger.decomposition_sum() - total) /
                                                      std::max(1.0, std::abs(total)));
        if (replay) {
          const RegretLedger l = regret(trace, r.opt);
          worst_replay = std::max(worst_replay, std::abs(l.total_regret() - total) / std::max(1.0, std::abs(total)));
        }
      }
    }
    out.push_back(check("orchestrator.post_seating_collisions", "no collisions after seating on clean runs",
                        static_cast<double>(post), 0.0, 0.0, post == 0 && clean > 0,
                        std::to_string(clean) + " clean partition runs"));
    out.push_back(check("orchestrator.ledger_identity", "stage regrets sum to the total regret", worst_identity, 0.0,
                        1e-9, worst_identity <= 1e-9 && worst_replay <= 1e-9,
                        "trace replay relative error " + fmt(worst_replay)));
  }
  {
    ProtocolConfig c = base_config(3, 2, 0.5, kind("linear"));
    PackingSpec p;
    p.centers = {Point{0.2, 0.2}, Point{0.8, 0.2}, Point{0.2, 0.8}, Point{0.8, 0.8}};
    p.r = 0.6;
    p.rho = 0.3;
    p.sigma = 0.12;
    c.packing = p;
    c.epsilon = 0.8;
    c.dither = true;
    c.horizon = 1'500'000;
    std::uint64_t inter = 0;
    std::uint64_t intra = 0;
    for (std::uint64_t s = 0; s < z.full_runs / 2; ++s) {
      c.seed = derive_seed(seed, "suite.packing", s);
      const RunResult r = run_protocol(c);
      inter += r.counters.inter_ball_collisions;
      for (auto v : r.counters.collisions_by_stage) intra += v;
    }
    out.push_back(check("orchestrator.packing_safety", "no collisions across distinct safe balls",
                        static_cast<double>(inter), 0.0, 0.0, inter == 0,
                        std::to_string(intra) + " collisions in total, all within a ball"));
  }
  {
    ProtocolConfig c = base_config(2, 1, 0.25, kind("constant", {{"value", 0.5}, {"L", 1.0}}));
    std::vector<std::pair<double, double>> reuse;
    std::vector<std::pair<double, double>> restart;
    for (int k = 24; k <= 40; k += 4) {
      c.horizon = std::uint64_t{1} << k;
      c.mode = Mode::Epochic;
      reuse.emplace_back(static_cast<double>(c.horizon), static_cast<double>(identification_rounds(c)));
      c.mode = Mode::EpochicRestart;
      restart.emplace_back(static_cast<double>(c.horizon), static_cast<double>(identification_rounds(c)));
    }
    const ExponentFit fr = fit_exponent(restart);
    const ExponentFit fe = fit_exponent(reuse);
    out.push_back(check("orchestrator.epochic_vs_restart",
                        "restart identification grows like T, reuse identification grows sublinearly", fe.slope, 1.0,
                        0.05, fr.slope >= 0.95 && fe.slope <= 0.95,
                        "restart slope " + fmt(fr.slope) + ", reuse slope " + fmt(fe.slope) + " over T = 2^24..2^40"));
  }

  // instances ----------------------------------------------------------------
  {
    std::uint64_t bad = 0;
    Rng rng(derive_seed(seed, "suite.instances", 0));
    std::vector<std::pair<Instance, double>> insts;  // instance, partition side
    insts.emplace_back(linear_instance(1), 0.25);
    insts.emplace_back(linear_instance(2), 0.5);
    insts.emplace_back(constant_instance(2, 0.3), 0.5);
    insts.emplace_back(pathology_1d(), 0.5);
    insts.emplace_back(spike_instance(1, 0.25, 2, 2, 0.5, {1, 3}, 2.4, 3).instance, 0.25);
    insts.emplace_back(spike_instance(2, 0.5, 2, 3, 0.5, {0, 3}, 1.0, 4).instance, 0.5);
    insts.emplace_back(random_cone_instance(1, 4, 9), 0.25);
    insts.emplace_back(random_cone_instance(2, 4, 10), 0.5);
    for (const auto& [inst, h] : insts) {
      const int d = inst.dim();
      const double lip = inst.lipschitz();
      for (std::uint64_t t = 0; t < z.instance_points; ++t) {
        Point x(d);
        Point y(d);
        for (int k = 0; k < d; ++k) {
          x[k] = rng.uniform01();
          y[k] = rng.uniform01();
        }
        const double fx = inst.mean(x);
        const double fy = inst.mean(y);
        bad += (fx >= 0.0 && fx <= 1.0) ? 0 : 1;
        bad += std::abs(fx - fy) <= lip * distance(x, y) * (1.0 + 1e-9) + 1e-12 ? 0 : 1;
      }
      const PartitionGeometry g(d, h);
      const int res = d == 1 ? 10'000 : 300;
      for (std::size_t c = 0; c < g.size(); ++c) {
        const Box b = g.cell_box(c);
        double best = -1.0;
        GridCounts counts{};
        counts.fill(1);
        for (int k = 0; k < d; ++k) counts[static_cast<std::size_t>(k)] = res;
        Region r;
        r.bounds = b;
        r.center = b.center();
        for (const Point& p : centered_grid(r, counts)) best = std::max(best, inst.mean(p));
        const auto a = inst.analytic_sup(r);
        if (!a) {
          ++bad;
          continue;
        }
        const double cover = net_covering_radius(r, counts);
        bad += (*a >= best - 1e-12 && *a <= best + lip * cover + 1e-12) ? 0 : 1;
      }
    }
    out.push_back(check("instances.certificates", "range, Lipschitz certificate and suprema hold for every instance",
                        static_cast<double>(bad), 0.0, 0.0, bad == 0, std::to_string(insts.size()) + " instances"));
  }
  {
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 100; ++s) {
      const int m = 2 + static_cast<int>(s % 4);
      const SpikeInstance si = spike_instance(1, 0.25, 1, m, 0.5, {2}, 2.0, derive_seed(seed, "suite.spike", s));
      const Box cell = PartitionGeometry(1, 0.25).cell_box(2);
      const auto grid = spike_grid(cell, m, si.delta / 2.0);
      double top = -1.0;
      double second = -1.0;
      for (const Point& p : grid) {
        const double v = si.instance.mean(p);
        if (v > top) {
          second = top;
          top = v;
        } else {
          second = std::max(second, v);
        }
      }
      worst = std::min(worst, (top - second) / si.delta);
    }
    out.push_back(check("instances.spike_margin", "the spike grid point is the unique in-cell argmax", worst, 1.0,
                        1e-12, worst >= 1.0 - 1e-12, "min margin / Delta over 100 spikes"));
  }

  // harness ------------------------------------------------------------------
  {
    const Estimate e = mc_oracle("drift", {{"u", 3}, {"N", 5}}, 200'000, derive_seed(seed, "suite.oracle", 0));
    const double zt = std::abs(e.mean - drift(3, 5)) / e.stderr_;
    const double zf = std::abs(e.mean - 2.0 * drift(3, 5)) / e.stderr_;
    out.push_back(check("harness.oracle_independence", "oracles accept the formula and reject a factor-2 fault", zt,
                        3.0, 0.0, zt <= 3.0 && zf > 3.0, "z against the faulty formula " + fmt(zf)));
  }
  {
    std::set<std::string> ids;
    for (const auto& c : out) ids.insert(c.check_id);
    const std::size_t expected = 31;
    const bool ok = ids.size() == out.size() && out.size() + 1 == expected;
    out.push_back(check("harness.report_completeness", "one report line per stated invariant",
                        static_cast<double>(out.size() + 1), static_cast<double>(expected), 0.0, ok));
  }
  return out;
}

}  // namespace lipmab
