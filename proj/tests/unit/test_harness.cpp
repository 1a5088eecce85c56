#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "lipmab/harness.hpp"
#include "lipmab/phase1.hpp"
#include "lipmab/seating.hpp"

using namespace lipmab;

TEST_SUITE("harness") {
  TEST_CASE("oracles agree with the closed forms") {
    const Estimate pk = mc_oracle("p_K", {{"K", 4}, {"N", 2}}, 400'000, 1);
    CHECK(pk.agrees(0.1875));
    CHECK(pk.agrees(success_probability(4, 2)));
    const Estimate dr = mc_oracle("drift", {{"u", 3}, {"N", 5}}, 400'000, 2);
    CHECK(dr.agrees(1.152));
    const Estimate ps = mc_oracle("phase2_success", {{"M", 2}, {"P", 3}, {"N", 2}}, 400'000, 3);
    CHECK(ps.agrees(1.0 / 12.0));
    CHECK_THROWS(mc_oracle("nonsense", {}, 1000, 1));
    CHECK_THROWS(mc_oracle("p_K", {{"K", 4}, {"N", 2}}, 10, 1));
  }

  TEST_CASE("fault injection: a doubled drift is caught") {
    const Estimate dr = mc_oracle("drift", {{"u", 3}, {"N", 5}}, 100'000, 4);
    CHECK(dr.agrees(drift(3, 5)));
    CHECK_FALSE(dr.agrees(2.0 * drift(3, 5)));
  }

  TEST_CASE("exponent fits") {
    std::vector<std::pair<double, double>> pw, lin;
    for (int k = 0; k < 6; ++k) {
      const double t = std::pow(10.0, 2 + k * 0.5);
      pw.emplace_back(t, std::pow(t, 2.0 / 3.0));
      lin.emplace_back(t, 3.5 * t);
    }
    const ExponentFit a = fit_exponent(pw);
    CHECK(std::abs(a.slope - 2.0 / 3.0) <= 1e-9);
    CHECK(a.used == 6);
    const ExponentFit b = fit_exponent(lin);
    CHECK(std::abs(b.slope - 1.0) <= 1e-9);
    CHECK(b.intercept == doctest::Approx(std::log(3.5)).epsilon(1e-9));
    pw.emplace_back(1e6, 0.0);
    pw.emplace_back(1e7, -1.0);
    const ExponentFit c = fit_exponent(pw);
    CHECK(c.excluded == 2);
    CHECK(std::abs(c.slope - 2.0 / 3.0) <= 1e-9);
  }

  TEST_CASE("Wilson interval") {
    const Interval all = wilson_interval(400, 400);
    CHECK(all.lo == doctest::Approx(400.0 / (400.0 + 1.959963984540054 * 1.959963984540054)).epsilon(1e-12));
    CHECK(all.hi == doctest::Approx(1.0));
    const Interval none = wilson_interval(0, 50);
    CHECK(none.lo == doctest::Approx(0.0));
    for (std::uint64_t s : {3u, 17u, 25u}) {
      const Interval a = wilson_interval(s, 50);
      const Interval b = wilson_interval(50 - s, 50);
      CHECK(a.lo == doctest::Approx(1.0 - b.hi).epsilon(1e-12));
      CHECK(a.lo < static_cast<double>(s) / 50.0);
      CHECK(a.hi > static_cast<double>(s) / 50.0);
    }
  }

  TEST_CASE("binomial goodness of fit") {
    std::mt19937_64 g(5);
    std::binomial_distribution<std::uint64_t> right(60, 0.3), wrong(60, 0.36);
    std::vector<std::uint64_t> a, b;
    for (int i = 0; i < 2000; ++i) {
      a.push_back(right(g));
      b.push_back(wrong(g));
    }
    CHECK(binomial_gof_pvalue(a, 60, 0.3) > 1e-3);
    CHECK(binomial_gof_pvalue(b, 60, 0.3) < 1e-6);
  }

  TEST_CASE("report schema") {
    const std::vector<CheckResult> checks{{"a.one", "claim", 1.0, 2.0, 0.0, true, ""},
                                          {"b.two", "other", 0.5, 0.1, 0.01, false, "why"}};
    const auto j = nlohmann::json::parse(report_json(checks));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    for (const char* key : {"check_id", "paper_ref", "observed", "bound", "tolerance", "pass"}) {
      CHECK_MESSAGE(j[0].contains(key), key);
    }
    CHECK(j[1]["pass"] == false);
  }

  TEST_CASE("batteries") {
    const SeatingBattery s = seating_battery(4, 500, 1);
    CHECK(s.distinct_runs == 500);
    CHECK(s.t_mc.mean <= s.time_bound + 3.0 * s.t_mc.stderr_);
    const Phase1Battery p = phase1_battery(suite_phase2_config(), 20, 1);
    CHECK(p.runs == 20);
    CHECK(p.first_counts.size() == 20);
    CHECK(p.t0 == phase1_budget(4, 2, p.delta_phase1).t0);
  }
}
