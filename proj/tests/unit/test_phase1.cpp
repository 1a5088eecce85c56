#include <cmath>

#include "doctest.h"
#include "lipmab/errors.hpp"
#include "lipmab/phase1.hpp"

using namespace lipmab;

TEST_SUITE("phase1") {
  TEST_CASE("success probability") {
    CHECK(success_probability(1, 1) == 1.0);
    CHECK(success_probability(4, 2) == doctest::Approx(0.1875).epsilon(1e-15));
    CHECK(success_probability(10, 3) == doctest::Approx(0.081).epsilon(1e-14));
    CHECK_THROWS_AS(success_probability(0, 1), DomainError);
  }

  TEST_CASE("budget fixed point, frozen from a brute-force scan") {
    // Smallest T0 with ceil(beta0(T0) * max(1/alpha^2, 12) / p_K) <= T0.
    const auto a = phase1_budget(2, 1, 0.05);
    CHECK(a.t0 == 255);
    CHECK(a.beta0 == doctest::Approx(10.62035125971339).epsilon(1e-12));
    CHECK(phase1_budget(4, 2, 0.025).t0 == 893);
    CHECK(phase1_budget(8, 3, 0.1 / 6.0).t0 == 2042);
    CHECK(phase1_budget(16, 4, 0.0125).t0 == 4261);
  }

  TEST_CASE("budget inequality holds at T0 and fails at T0 - 1") {
    for (std::size_t k : {2u, 4u, 9u}) {
      for (std::size_t n : {1u, 2u, 3u}) {
        if (n > 1 && k == 1) continue;
        const double delta = 0.02;
        const auto b = phase1_budget(k, n, delta);
        const double f = 12.0 / success_probability(k, n);
        CHECK(static_cast<double>(b.t0) >= phase1_beta(k, n, b.t0, delta) * f);
        CHECK(static_cast<double>(b.t0 - 1) < phase1_beta(k, n, b.t0 - 1, delta) * f);
      }
    }
  }

  TEST_CASE("budget scaling") {
    // p_K doubles from (K=4,N=2) to (K=2,N=2): T0 roughly halves.
    const double r = static_cast<double>(phase1_budget(4, 2, 0.05).t0) / phase1_budget(2, 2, 0.05).t0;
    CHECK(r > 1.2);
    CHECK(r < 2.2);
    // delta / 10 adds about log(10) to beta0.
    const auto a = phase1_budget(4, 2, 0.05);
    const auto b = phase1_budget(4, 2, 0.005);
    CHECK(static_cast<double>(b.t0) / a.t0 == doctest::Approx(b.beta0 / a.beta0).epsilon(0.01));
  }

  TEST_CASE("choose") {
    Phase1State one(1, Phase1Budget{10, 3.0});
    Rng r(1);
    for (int i = 0; i < 5; ++i) CHECK(one.choose(r) == 0);
    Phase1State four(4, Phase1Budget{100'000, 3.0});
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 100'000; ++i) ++hits[four.choose(r)];
    for (int h : hits) CHECK(std::abs(h / 100'000.0 - 0.25) <= 0.005);
  }

  TEST_CASE("update") {
    Phase1State s(3, Phase1Budget{10, 3.0});
    s.update(2, PlayerOutcome{true, 0.0});
    CHECK(s.counts()[2] == 0);
    CHECK(s.round() == 1);
    s.update(2, PlayerOutcome{false, 0.7});
    CHECK(s.counts()[2] == 1);
    CHECK(s.sums()[2] == doctest::Approx(0.7));
    Phase1State m(1, Phase1Budget{10, 3.0});
    for (double v : {0.2, 0.4, 0.6}) m.update(0, PlayerOutcome{false, v});
    CHECK(m.mean(0) == doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("update after T0 is an error") {
    Phase1State s(2, Phase1Budget{1, 3.0});
    s.update(0, PlayerOutcome{false, 1.0});
    CHECK(s.done());
    CHECK_THROWS_AS(s.update(0, PlayerOutcome{false, 1.0}), PhaseError);
  }

  TEST_CASE("brackets") {
    Phase1State empty(1, Phase1Budget{10, 3.0});
    const Bracket e = phase1_brackets(empty, 0.0);
    CHECK(e.lcb[0] <= 0.0);
    CHECK(e.ucb[0] >= 1.0);  // r = sqrt(beta0/2) >= 1

    Phase1State s(1, Phase1Budget{100, 8.0});
    for (int i = 0; i < 16; ++i) s.update(0, PlayerOutcome{false, i % 2 == 0 ? 1.0 : 0.0});
    const Bracket b = phase1_brackets(s, 1.0, 0.5, 1);
    CHECK(s.radius(0) == doctest::Approx(0.5));
    CHECK(b.lcb[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.ucb[0] == doctest::Approx(1.25).epsilon(1e-15));
  }
}
