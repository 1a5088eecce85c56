#include <cmath>

#include "doctest.h"
#include "lipmab/errors.hpp"
#include "lipmab/instances.hpp"
#include "lipmab/phase3.hpp"

using namespace lipmab;

TEST_SUITE("phase3") {
  TEST_CASE("rescale") {
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.5));
    const UnitCubeMap m = rescale(a.region(1));
    CHECK(m.to_region(Point{0.0})[0] == 0.5);
    CHECK(m.to_region(Point{1.0})[0] == 1.0);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const Point x{0.5 + 0.5 * rng.uniform01()};
      CHECK(m.to_region(m.to_unit(x))[0] == doctest::Approx(x[0]).epsilon(1e-15));
    }
  }

  TEST_CASE("rescaled slope is L h") {
    const Instance lin = linear_instance(1);
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.25));
    const UnitCubeMap m = rescale(a.region(2));
    Rng rng(2);
    double worst = 0.0;
    for (int i = 0; i < 10'000; ++i) {
      const Point u{rng.uniform01()};
      const Point v{rng.uniform01()};
      if (u[0] == v[0]) continue;
      const double s = std::abs(lin.mean(m.to_region(u)) - lin.mean(m.to_region(v))) / std::abs(u[0] - v[0]);
      worst = std::max(worst, s);
    }
    CHECK(worst == doctest::Approx(0.25).epsilon(1e-9));
  }

  TEST_CASE("grid counts") {
    CHECK(epoch_grid_count(1.0, 1, 0) == 1);
    CHECK(epoch_grid_count(1.0, 1, 6) == 4);
    CHECK(epoch_grid_count(1.0, 1, 7) == 6);  // ceil(2^(7/3)) = ceil(5.04)
    for (int e = 0; e < 40; ++e) CHECK(epoch_grid_count(0.6, 2, e + 1) >= epoch_grid_count(0.6, 2, e));
    CHECK_THROWS_AS(epoch_grid_count(1.0, 1, -1), DomainError);
  }

  TEST_CASE("learner choices") {
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.5));
    ZoomLearner single(a.region(0), 1.0, 0.5);
    CHECK(single.grid().size() == 1);
    CHECK(single.choose() == 0);

    // Epoch 6 with L h = 1 has 4 points; skip ahead to it.
    ZoomLearner z(a.region(0), 2.0, 0.5);
    while (z.epoch() < 6) z.update(z.choose(), PlayerOutcome{false, 0.5});
    REQUIRE(z.grid().size() == 4);
    z.update(1, PlayerOutcome{false, 0.4});
    CHECK(z.count(1) == 1);
    CHECK(z.mean(1) == doctest::Approx(0.4));
    CHECK(z.choose() == 0);  // unvisited first
    z.update(0, PlayerOutcome{false, 0.2});
    z.update(0, PlayerOutcome{false, 0.6});
    CHECK(z.mean(0) == doctest::Approx(0.4).epsilon(1e-15));
    const std::uint64_t before = z.epoch_round();
    z.update(2, PlayerOutcome{true, 0.0});
    CHECK(z.count(2) == 0);
    CHECK(z.epoch_round() == before + 1);
  }

  TEST_CASE("epoch rollover resets statistics") {
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.5));
    ZoomLearner z(a.region(1), 4.0, 0.5);
    std::uint64_t rounds = 0;
    for (int e = 0; e < 8; ++e) {
      CHECK(z.epoch() == e);
      const std::uint64_t len = z.epoch_length();
      for (std::uint64_t t = 0; t < len; ++t) {
        z.update(z.choose(), PlayerOutcome{false, 1.0});
        ++rounds;
      }
      for (std::size_t i = 0; i < z.grid().size(); ++i) CHECK(z.count(i) == 0);
    }
    CHECK(z.total_rounds() == rounds);
  }

  TEST_CASE("index shift leaves the choice unchanged") {
    const Arena a = Arena::from_partition(PartitionGeometry(1, 0.5));
    for (int shift = 0; shift < 2; ++shift) {
      ZoomLearner z(a.region(0), 8.0, 0.5);
      while (z.epoch() < 5) z.update(z.choose(), PlayerOutcome{false, 0.0});
      Rng rng(9);
      std::vector<std::size_t> seq;
      for (int t = 0; t < 30; ++t) {
        const std::size_t i = z.choose();
        seq.push_back(i);
        const double base = 0.3 + 0.05 * static_cast<double>(i);
        z.update(i, PlayerOutcome{false, base + (shift ? 0.25 : 0.0)});
      }
      static std::vector<std::size_t> first;
      if (shift == 0) {
        first = seq;
      } else {
        CHECK(seq == first);
      }
    }
  }
}
