#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lipmab {

__extension__ using uint128 = unsigned __int128;

// splitmix64 finalizer: a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view s) noexcept;

// Stream seed for (master, role, index):
//   a = mix64(master ^ mix64(fnv1a64(role)))
//   s = mix64(a ^ mix64(index + 0x9E3779B97F4A7C15))
// For fixed (master, role) the map index -> s is injective.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                          std::uint64_t index) noexcept;

// Portable random stream. Engine output is fixed by the standard; the
// distributions below are hand-written so results do not depend on the
// standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}; n must be positive. Lemire's rejection method.
  std::uint64_t index(std::uint64_t n) {
    std::uint64_t x = engine_();
    uint128 m = static_cast<uint128>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = engine_();
        m = static_cast<uint128>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lipmab
