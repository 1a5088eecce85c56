#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipmab/config.hpp"
#include "lipmab/orchestrator.hpp"

namespace lipmab {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t reps = 0;

  // |mean - target| <= k standard errors (exact match when stderr is 0).
  bool agrees(double target, double k = 3.0) const noexcept;
};

// Brute-force simulation of the raw experiment behind a formula. Uses only
// Rng and arithmetic, never the protocol modules. Tags and parameters:
//   "p_K"            K, N: player 0 alone in cell 0 after N uniform draws
//   "drift"          u, N: players seated in one round, u of N unseated
//   "phase2_success" M, P, N: player 0 alone in its cell on probe (0, 0)
Estimate mc_oracle(std::string_view tag, const std::map<std::string, double>& params,
                   std::uint64_t reps, std::uint64_t seed);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // non-positive values dropped
};

// OLS of log(y) on log(x).
ExponentFit fit_exponent(std::span<const std::pair<double, double>> series);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval for a binomial proportion (95% by default).
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

// Upper-tail p-value of a chi-square goodness-of-fit test of samples
// against binomial(n, p). Bins are merged until each expects >= 5.
double binomial_gof_pvalue(std::span<const std::uint64_t> samples, std::uint64_t n, double p);

struct CheckResult {
  std::string check_id;
  std::string paper_ref;  // the claim being checked, in words
  double observed = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

std::string report_json(std::span<const CheckResult> checks);

// Batteries shared by the verify suite and the acceptance runner. Seeds
// run seed0, seed0 + 1, ...

struct Phase1Battery {
  std::uint64_t runs = 0;
  std::uint64_t valid = 0;
  std::uint64_t counts_ok = 0;
  std::uint64_t means_ok = 0;
  std::uint64_t t0 = 0;
  double p_k = 0.0;
  double delta_phase1 = 0.0;
  std::vector<std::uint64_t> first_counts;  // o(player 0, cell 0) per run
  std::vector<double> center_means;         // per cell, averaged over runs and players
};

// Phase I only: each run stops right after it.
Phase1Battery phase1_battery(ProtocolConfig config, std::uint64_t runs, std::uint64_t seed0);

struct SelectionBattery {
  std::uint64_t runs = 0;
  std::uint64_t clean = 0;
  std::uint64_t coverage = 0;
  std::uint64_t eps_optimal = 0;
  std::uint64_t clean_eps_optimal = 0;
  std::uint64_t clean_consensus = 0;
  std::uint64_t clean_width_ok = 0;  // every refined width <= epsilon_int
  double max_clean_width = 0.0;
  double epsilon = 0.0;
  double epsilon_int = 0.0;
  double delta_phase1 = 0.0;
  double delta_phase2 = 0.0;
  std::uint64_t t1 = 0;
  double q = 0.0;
  // Pooled per-triple success frequency over players, probes and runs.
  double success_rate = 0.0;
  double success_stderr = 0.0;
  std::map<std::vector<std::size_t>, std::uint64_t> clean_selected;  // player 0's set
  std::vector<double> center_means;  // Phase I center means, averaged
};

// Runs stop at the first selection. Stops early once `clean_target` clean
// runs are collected (0 = run all).
SelectionBattery selection_battery(ProtocolConfig config, std::uint64_t runs, std::uint64_t seed0,
                                   const RunOptions& base = {}, std::uint64_t clean_target = 0);

struct SeatingBattery {
  std::size_t n_players = 0;
  std::uint64_t runs = 0;
  Estimate t_mc;
  Estimate unseated_mass;
  std::uint64_t distinct_runs = 0;
  double time_bound = 0.0;  // sum of inverse drifts
  double mass_bound = 0.0;
};

SeatingBattery seating_battery(std::size_t n_players, std::uint64_t runs, std::uint64_t seed0);

// Mean in-cell pseudo regret of a single seated learner on one partition
// cell, against the cell supremum, at T' = 2^k for k in [k_lo, k_hi].
std::vector<std::pair<double, double>> phase3_curve(const Instance& instance, double h, std::size_t cell,
                                                    double ucb_constant, int k_lo, int k_hi,
                                                    std::uint64_t seeds, std::uint64_t seed0);

// Single cone of slope 6 and height 0.9 with apex 0.3173, inside cell 1
// of the h = 1/4 partition. Used for the in-cell rate check.
Instance suite_cone_instance();

// Identification rounds (Phase I + Phase II) from the public plan.
std::uint64_t identification_rounds(const ProtocolConfig& config);

// Battery configurations used by the suite: a dithered linear instance
// (N=2, K=4, epsilon 0.4) and an epsilon-unique spike (N=2, K=4, epsilon 0.07).
ProtocolConfig suite_phase2_config();
ProtocolConfig suite_unique_config();

enum class SuiteLevel { Quick, Full };

// One report line per stated invariant.
std::vector<CheckResult> verify_suite(SuiteLevel level, std::uint64_t seed = 20261016);

}  // namespace lipmab
