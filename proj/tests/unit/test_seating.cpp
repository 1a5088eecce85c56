#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "doctest.h"
#include "lipmab/errors.hpp"
#include "lipmab/seating.hpp"

using namespace lipmab;

namespace {

// Two fresh players whose first draws on {0,1} are (a, b).
std::vector<Rng> streams_with_first_draws(std::size_t a, std::size_t b) {
  for (std::uint64_t s = 0;; ++s) {
    Rng x(2 * s);
    Rng y(2 * s + 1);
    if (x.index(2) == a && y.index(2) == b) return {Rng(2 * s), Rng(2 * s + 1)};
  }
}

}  // namespace

TEST_SUITE("seating") {
  TEST_CASE("drift values") {
    CHECK(drift(1, 5) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(drift(2, 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(drift(3, 5) - 1.152) <= 1e-12);
    CHECK_THROWS_AS(drift(0, 5), DomainError);
    CHECK_THROWS_AS(drift(6, 5), DomainError);
  }

  TEST_CASE("time bounds") {
    const double c = std::numbers::e * std::numbers::pi * std::numbers::pi / 6.0;
    CHECK(expected_time_bound(1).sum_inverse_drift == 1.0);
    CHECK(expected_time_bound(1).linear == doctest::Approx(4.4713943829267695).epsilon(1e-12));
    CHECK(expected_time_bound(2).sum_inverse_drift == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(expected_time_bound(2).linear == doctest::Approx(8.942788765853539).epsilon(1e-12));
    CHECK(expected_time_bound(3).linear == doctest::Approx(3.0 * c));
    for (std::size_t n = 1; n < 64; ++n) {
      CHECK(expected_time_bound(n + 1).sum_inverse_drift > expected_time_bound(n).sum_inverse_drift);
    }
  }

  TEST_CASE("one round outcomes") {
    {
      auto rngs = streams_with_first_draws(0, 1);
      SeatingState s({4, 9});
      const auto r = s.mc_round(rngs);
      CHECK(r.newly_seated == 2);
      CHECK(s.unseated() == 0);
      CHECK(s.seat(0) == 4u);
      CHECK(s.seat(1) == 9u);
    }
    {
      auto rngs = streams_with_first_draws(0, 0);
      SeatingState s({4, 9});
      const auto r = s.mc_round(rngs);
      CHECK(r.newly_seated == 0);
      CHECK(r.collided[0] == 1);
      CHECK(r.collided[1] == 1);
      CHECK(s.unseated() == 2);
    }
  }

  TEST_CASE("a newcomer on an occupied seat bumps nobody but collides") {
    // Player 1 holds target 0; player 0 lands on it.
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      std::vector<Rng> rngs{Rng(seed), Rng(seed + 1000)};
      Rng peek(seed);
      const auto c = peek.index(2);
      SeatingState s({5, 6}, {std::nullopt, std::optional<std::size_t>(0)});
      const auto r = s.mc_round(rngs);
      if (c == 0) {
        CHECK(r.collided[0] == 1);
        CHECK(r.collided[1] == 1);
        CHECK_FALSE(s.seat(0).has_value());
        CHECK(s.seat(1) == 5u);
      } else {
        CHECK(s.seat(0) == 6u);
        CHECK(r.collided[1] == 0);
      }
    }
  }

  TEST_CASE("run until seated") {
    CHECK(run_until_seated({3}, 1).t_mc == 1);
    for (std::uint64_t s = 0; s < 50; ++s) {
      const std::vector<std::size_t> targets{2, 5, 7, 11, 13, 17, 19, 23};
      const SeatingRun r = run_until_seated(targets, s);
      std::vector<std::size_t> a = r.assignment;
      std::sort(a.begin(), a.end());
      CHECK(a == targets);
      CHECK(r.unseated_trace.size() == r.t_mc);
      CHECK(r.unseated_trace.front() == 8);
    }
  }

  TEST_CASE("seating state validation") {
    CHECK_THROWS_AS(SeatingState(std::vector<std::size_t>{}), DomainError);
    CHECK_THROWS_AS(SeatingState({1, 1}), DomainError);
    CHECK_THROWS_AS(SeatingState({1, 2}, {std::optional<std::size_t>(0), std::optional<std::size_t>(0)}),
                    DomainError);
    std::vector<Rng> rngs{Rng(1)};
    SeatingState done({1}, {std::optional<std::size_t>(0)});
    CHECK_THROWS_AS(done.mc_round(rngs), PhaseError);
  }

  // Exact E[T_MC] from a Markov-chain recursion on the unseated count,
  // computed once outside the library and frozen here.
  TEST_CASE("mean seating time against the exact expectation") {
    const std::vector<std::pair<std::size_t, double>> exact{{4, 5.542483660130718}, {8, 12.40836040916899}};
    for (const auto& [n, e] : exact) {
      std::vector<std::size_t> targets(n);
      for (std::size_t i = 0; i < n; ++i) targets[i] = 2 * i;
      double sum = 0.0, sq = 0.0;
      constexpr int kRuns = 20000;
      for (int r = 0; r < kRuns; ++r) {
        const double t = static_cast<double>(run_until_seated(targets, 7000 + r).t_mc);
        sum += t;
        sq += t * t;
      }
      const double mean = sum / kRuns;
      const double se = std::sqrt((sq / kRuns - mean * mean) / kRuns);
      CHECK(std::abs(mean - e) <= 3.0 * se);
      CHECK(e < expected_time_bound(n).sum_inverse_drift);
    }
  }
}
