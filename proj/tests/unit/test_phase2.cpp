#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "lipmab/errors.hpp"
#include "lipmab/phase2.hpp"

using namespace lipmab;

namespace {

Bracket make_bracket(std::vector<double> lcb, std::vector<double> ucb) {
  Bracket b;
  for (std::size_t i = 0; i < lcb.size(); ++i) b.cells.push_back(i);
  b.lcb = std::move(lcb);
  b.ucb = std::move(ucb);
  return b;
}

}  // namespace

TEST_SUITE("phase2") {
  TEST_CASE("active set") {
    const Bracket same = make_bracket({0.2, 0.2, 0.2}, {0.6, 0.6, 0.6});
    CHECK(active_set(same, 1).cells.size() == 3);
    const Bracket b = make_bracket({0.8, 0.1, 0.1}, {1.0, 0.5, 0.9});
    CHECK(active_set(b, 1).cells == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(active_set(b, 4), DomainError);
  }

  TEST_CASE("nets") {
    const PartitionGeometry g1(1, 0.5);
    const ProbeNet n = build_net(g1, 0, 0.1);
    REQUIRE(n.size() == 5);
    const double want[] = {0.05, 0.15, 0.25, 0.35, 0.45};
    for (std::size_t i = 0; i < 5; ++i) CHECK(n.points[i][0] == doctest::Approx(want[i]).epsilon(1e-14));
    // Exhaustive covering check on a 10^4 grid.
    double worst = 0.0;
    for (int i = 0; i <= 10'000; ++i) {
      const double x = 0.5 * i / 10'000.0;
      double best = 1.0;
      for (const Point& p : n.points) best = std::min(best, std::abs(p[0] - x));
      worst = std::max(worst, best);
    }
    CHECK(worst <= 0.05 + 1e-12);

    CHECK(build_net(g1, 1, 0.6).size() == 1);
    CHECK(build_net(g1, 1, 0.6).points[0][0] == 0.75);

    const PartitionGeometry g2(2, 0.5);
    const ProbeNet n2 = build_net(g2, 3, 0.1 * std::sqrt(2.0));
    CHECK(n2.size() == 25);
    CHECK(net_size_bound(0.5, 2, 0.1 * std::sqrt(2.0)) == doctest::Approx(49.0));
  }

  TEST_CASE("params, frozen from an integer scan of the b constraints") {
    const Phase2Params p = phase2_params(0.2, 1.0, 0.05, 20, 2, 10, 2);
    CHECK(p.eta == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(p.beta1 == doctest::Approx(std::log(1600.0)).epsilon(1e-15));
    CHECK(p.b == 1476);
    CHECK(p.r1 == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(2.0 * p.r1 + 1.0 * p.eta <= 0.2);
    CHECK(p.q == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(p.t1 == 118080);

    CHECK(phase2_params(0.4, 0.5, 0.025, 8, 3, 2, 2).b == 358);
    CHECK(phase2_params(0.4, 0.5, 0.025, 8, 3, 2, 2).t1 == 8592);
    CHECK(phase2_params(0.07, 2.4, 0.025, 12, 4, 3, 2).b == 12343);
    CHECK(phase2_params(0.07, 2.4, 0.025, 12, 4, 3, 2).t1 == 592464);
    CHECK(phase2_params(0.1, 1.0, 0.05, 5, 1, 5, 1).b == 4794);
    CHECK(phase2_params(0.1, 1.0, 0.05, 5, 1, 5, 1).t1 == 47940);
  }

  TEST_CASE("params scaling") {
    const Phase2Params a = phase2_params(0.2, 1.0, 0.05, 20, 2, 10, 2);
    const Phase2Params b = phase2_params(0.1, 1.0, 0.05, 20, 2, 10, 2);
    CHECK(b.eta == doctest::Approx(a.eta / 2.0));
    CHECK(static_cast<double>(b.b) / a.b == doctest::Approx(4.0).epsilon(0.01));
    CHECK(phase2_params(0.2, 1.0, 0.05, 20, 3, 7, 1).q == doctest::Approx(1.0 / 21.0).epsilon(1e-15));
  }

  TEST_CASE("params validation") {
    CHECK_THROWS_AS(phase2_params(0.0, 1.0, 0.05, 1, 1, 1, 1), DomainError);
    CHECK_THROWS_AS(phase2_params(0.1, 1.0, 0.3, 1, 1, 1, 1), DomainError);
    CHECK_THROWS_AS(phase2_params(0.1, 1.0, 0.05, 0, 1, 1, 1), DomainError);
  }

  TEST_CASE("t1 saturates instead of wrapping") {
    Phase2Params p = phase2_params(0.2, 1.0, 0.05, 20, 2, 10, 2);
    p.q = 1e-300;
    CHECK(p.rounds_for(p.b) == std::numeric_limits<std::uint64_t>::max());
  }

  TEST_CASE("dither table") {
    const DitherTable t = dither_table(5, 0.2);
    const double want[] = {0.0, 0.0375, 0.075, 0.1125, 0.15};
    REQUIRE(t.offsets.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(t.offsets[i] - want[i]) <= 1e-12);
    CHECK(std::abs(t.min_gap - 0.0375) <= 1e-12);
    for (std::size_t k : {2u, 3u, 17u}) {
      const DitherTable d = dither_table(k, 0.3);
      CHECK(d.offsets.back() == doctest::Approx(0.225).epsilon(1e-15));
    }
    const DitherTable two = dither_table(2, 0.2);
    CHECK(two.offsets == std::vector<double>{0.0, two.eta_dit});
    CHECK(two.min_gap == two.eta_dit);
    CHECK(dither_table(1, 0.2).empty());
  }

  TEST_CASE("gap enforcement") {
    const Phase2Params p = phase2_params(0.2, 1.0, 0.05, 20, 2, 10, 2);
    CHECK(dither_gap_enforce(p, 1.0).b == p.b);
    // Smallest b with 4 sqrt(beta1 / 2b) <= 0.0375, i.e. ceil(8 beta1 / 0.0375^2).
    const Phase2Params e = dither_gap_enforce(p, 0.0375);
    CHECK(e.b == 41972);
    CHECK(4.0 * e.r1 <= 0.0375);
    CHECK(e.t1 == e.rounds_for(e.b));
    const Phase2Params half = dither_gap_enforce(p, 0.0375 / 2.0);
    CHECK(static_cast<double>(half.b) / e.b == doctest::Approx(4.0).epsilon(0.001));
  }

  TEST_CASE("select top n") {
    const Bracket all = make_bracket({0.1, 0.2, 0.3}, {1, 1, 1});
    CHECK(select_top_n(all, nullptr, 3).cells == std::vector<std::size_t>{0, 1, 2});
    const Bracket tie = make_bracket({0.5, 0.5, 0.1}, {1, 1, 1});
    CHECK(select_top_n(tie, nullptr, 1).cells == std::vector<std::size_t>{0});
    const DitherTable d = dither_table(3, 0.4);
    CHECK(select_top_n(tie, &d, 1).cells == std::vector<std::size_t>{1});
  }

  // Base values two levels apart, so only ties within a level are in play;
  // the dither has to break those the same way for every player.
  TEST_CASE("dithered consensus under perturbations within r1") {
    Rng rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t k = 2 + rng.index(8);
      const std::size_t n = 1 + rng.index(k);
      const DitherTable d = dither_table(k, 0.2);
      const double r1 = d.min_gap / 4.0;
      Bracket a = make_bracket(std::vector<double>(k), std::vector<double>(k, 1.0));
      for (double& v : a.lcb) v = rng.uniform01() < 0.5 ? 0.3 : 0.7;
      Bracket b = a;
      for (std::size_t i = 0; i < k; ++i) {
        a.lcb[i] += (2.0 * rng.uniform01() - 1.0) * r1 * 0.999;
        b.lcb[i] += (2.0 * rng.uniform01() - 1.0) * r1 * 0.999;
      }
      REQUIRE(select_top_n(a, &d, n).cells == select_top_n(b, &d, n).cells);
    }
  }

  TEST_CASE("eps uniqueness") {
    const std::vector<double> lin{0.5, 1.0};
    CHECK(eps_unique(lin, 1, 0.1));
    const std::vector<double> flat{0.5, 0.5, 0.5};
    CHECK_FALSE(eps_unique(flat, 1, 1e-9));
    CHECK_FALSE(eps_unique(lin, 1, 0.25));  // gap exactly 2 eps
  }

  TEST_CASE("stratified schedule") {
    const StratifiedSchedule one({3, 2}, 1);
    std::vector<std::pair<std::size_t, std::size_t>> seq;
    for (std::uint64_t t = 0; t < 6; ++t) {
      const auto a = one.assign(0, t);
      REQUIRE(a);
      seq.emplace_back(a->slot, a->probe);
    }
    CHECK(seq == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 0}});

    const StratifiedSchedule two({2, 3, 1, 2}, 2);
    const auto fresh = [] {
      return std::vector<std::vector<int>>{std::vector<int>(2), std::vector<int>(3), std::vector<int>(1),
                                           std::vector<int>(2)};
    };
    std::vector<std::vector<std::vector<int>>> visits{fresh(), fresh()};
    for (std::uint64_t t = 0; t < two.block_length(); ++t) {
      const auto a = two.assign(0, t);
      const auto b = two.assign(1, t);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(a->slot != b->slot);
      ++visits[0][a->slot][a->probe];
      ++visits[1][b->slot][b->probe];
    }
    // Per player, every cell gets block/S visits spread over its probes.
    for (const auto& player : visits) {
      for (const auto& v : player) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        CHECK(*hi - *lo <= 1);
        CHECK(std::accumulate(v.begin(), v.end(), 0) == 3);
      }
    }
  }

  TEST_CASE("state: choose, update, brackets") {
    const PartitionGeometry g(1, 0.5);
    Phase2Params p = phase2_params(0.2, 1.0, 0.05, 2, 2, 1, 1);
    p.b = 1;
    p.r1 = 0.05;
    p.eta = 0.1;
    Phase2State s({build_net(g, 0, 0.6), build_net(g, 1, 0.6)}, p);
    Rng rng(3);
    std::vector<int> hits(2, 0);
    for (int i = 0; i < 100'000; ++i) {
      const auto c = s.choose_uniform(rng);
      CHECK(c.probe == 0);
      ++hits[c.slot];
    }
    for (int h : hits) CHECK(std::abs(h / 100'000.0 - 0.5) <= 0.005);

    s.update(Phase2State::Choice{0, 0}, PlayerOutcome{true, 0.0});
    CHECK(s.count(0, 0) == 0);
    s.update(Phase2State::Choice{0, 0}, PlayerOutcome{false, 0.5});
    CHECK(s.count(0, 0) == 1);
    CHECK(s.sum(0, 0) == 0.5);
    const std::vector<std::size_t> cells{0};
    const Bracket b = refined_brackets(s, cells);
    CHECK(b.lcb[0] == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(b.ucb[0] == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(b.ucb[0] - b.lcb[0] == doctest::Approx(0.2).epsilon(1e-14));
  }

  TEST_CASE("brackets take the best probe") {
    const PartitionGeometry g(1, 0.5);
    Phase2Params p = phase2_params(0.2, 1.0, 0.05, 2, 1, 2, 1);
    p.b = 1;
    p.r1 = 0.05;
    Phase2State s({build_net(g, 0, 0.25)}, p);
    REQUIRE(s.nets()[0].size() == 2);
    s.update(Phase2State::Choice{0, 0}, PlayerOutcome{false, 0.3});
    s.update(Phase2State::Choice{0, 1}, PlayerOutcome{false, 0.6});
    const std::vector<std::size_t> cells{0};
    CHECK(refined_brackets(s, cells).lcb[0] == doctest::Approx(0.55));
  }

  TEST_CASE("nested refinement carries statistics") {
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.5));
    const ProbeNet coarse = build_net(a, 0, 0.4, true);
    const ProbeNet fine = build_net(a, 0, 0.1, true);
    REQUIRE(fine.size() % coarse.size() == 0);
    Phase2State s({coarse}, phase2_params(0.2, 1.0, 0.05, 2, 1, 2, 1));
    s.update(Phase2State::Choice{0, 0}, PlayerOutcome{false, 0.25});
    s.refine({fine});
    std::uint64_t total = 0;
    for (std::size_t z = 0; z < fine.size(); ++z) total += s.count(0, z);
    CHECK(total == 1);
  }
}
