#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipmab/config.hpp"
#include "lipmab/errors.hpp"
#include "lipmab/harness.hpp"
#include "lipmab/ledger.hpp"
#include "lipmab/orchestrator.hpp"
#include "lipmab/report_io.hpp"
#include "lipmab/seating.hpp"

namespace fs = std::filesystem;
using namespace lipmab;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

// "a..b" inclusive.
std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const auto v = std::stoull(s);
    return {v, v};
  }
  const auto a = std::stoull(s.substr(0, dots));
  const auto b = std::stoull(s.substr(dots + 2));
  if (b < a) throw CLI::ValidationError("--seeds", "range end precedes start");
  return {a, b};
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            bool trace) {
  ProtocolConfig c = load_config(config_path);
  if (seed) c.seed = *seed;
  const fs::path out(out_dir);
  fs::create_directories(out);

  RunResult r;
  if (trace) {
    std::ofstream f(out / "trace.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trace.csv");
    CsvTraceWriter w(f, c.packing ? c.packing->centers.front().dim() : c.d);
    RunOptions o;
    o.sink = &w;
    r = run_protocol(c, o);
  } else {
    r = run_protocol(c);
  }
  std::ostringstream ledger;
  write_ledger_csv(ledger, r.ledger);
  write_file(out / "ledger.csv", ledger.str());
  write_file(out / "summary.json", summary_json(c, r));
  write_file(out / "manifest.json", manifest_json(c, r));
  std::cout << "regret " << format_double(r.ledger.total_regret()) << " over " << r.ledger.rounds
            << " rounds, clean " << (r.flags.clean() ? "yes" : "no") << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& seeds, const std::vector<std::uint64_t>& horizons) {
  ProtocolConfig c = load_config(config_path);
  const auto [a, b] = parse_range(seeds);
  std::vector<std::uint64_t> hs = horizons;
  if (hs.empty()) hs.push_back(c.horizon);
  std::cout << "seed,horizon,regret,pseudo_regret,identification_rounds,t_mc,clean\n";
  for (std::uint64_t t : hs) {
    for (std::uint64_t s = a; s <= b; ++s) {
      c.seed = s;
      c.horizon = t;
      const RunResult r = run_protocol(c);
      const auto tmc = r.first_t_mc();
      std::cout << s << ',' << t << ',' << format_double(r.ledger.total_regret()) << ','
                << format_double(r.ledger.total_pseudo_regret()) << ',' << r.plan.identification_rounds() << ','
                << (tmc ? std::to_string(*tmc) : std::string("NA")) << ',' << (r.flags.clean() ? 1 : 0) << '\n';
    }
  }
  return 0;
}

int cmd_verify(bool full, std::uint64_t seed, const std::string& out) {
  const auto checks = verify_suite(full ? SuiteLevel::Full : SuiteLevel::Quick, seed);
  int failed = 0;
  for (const CheckResult& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.check_id << "  observed=" << format_double(c.observed)
              << " bound=" << format_double(c.bound);
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
    failed += c.pass ? 0 : 1;
  }
  std::cout << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
  if (!out.empty()) write_file(out, report_json(checks));
  return failed == 0 ? 0 : 1;
}

int cmd_bench_mc(std::size_t n_max, std::uint64_t reps, std::uint64_t seed) {
  std::cout << "N,mean_t_mc,stderr,sum_inverse_drift,linear_bound,mean_unseated_mass,mass_bound,distinct\n";
  for (std::size_t n = 1; n <= n_max; ++n) {
    const SeatingBattery b = seating_battery(n, reps, seed);
    const double linear = expected_time_bound(n).linear;
    std::cout << n << ',' << format_double(b.t_mc.mean) << ',' << format_double(b.t_mc.stderr_) << ','
              << format_double(b.time_bound) << ',' << format_double(linear) << ','
              << format_double(b.unseated_mass.mean) << ',' << format_double(b.mass_bound) << ','
              << b.distinct_runs << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-player Lipschitz bandit simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "simulate one run and write trace, ledger, summary and manifest");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool no_trace = false;
  run->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--no-trace", no_trace, "skip trace.csv");

  auto* sweep = app.add_subcommand("sweep", "run a seed range over several horizons, CSV on stdout");
  std::string sweep_config;
  std::string seeds = "0..9";
  std::vector<std::uint64_t> horizons;
  sweep->add_option("--config", sweep_config, "JSON config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds, "inclusive range a..b");
  sweep->add_option("--horizons", horizons, "comma separated horizons")->delimiter(',');

  auto* verify = app.add_subcommand("verify", "run the invariant battery against the analytic oracles");
  bool full = false;
  std::uint64_t verify_seed = 20261016;
  std::string report;
  verify->add_flag("--full", full, "full replication counts");
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--out", report, "write the JSON report here");

  auto* bench = app.add_subcommand("bench-mc", "musical chairs seating time against the drift bounds");
  std::size_t n_max = 64;
  std::uint64_t reps = 2000;
  std::uint64_t bench_seed = 1;
  bench->add_option("--n-max", n_max, "largest N")->check(CLI::Range(1, 4096));
  bench->add_option("--reps", reps, "runs per N")->check(CLI::Range(1, 100'000'000));
  bench->add_option("--seed", bench_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, !no_trace);
    if (*sweep) return cmd_sweep(sweep_config, seeds, horizons);
    if (*verify) return cmd_verify(full, verify_seed, report);
    if (*bench) return cmd_bench_mc(n_max, reps, bench_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
