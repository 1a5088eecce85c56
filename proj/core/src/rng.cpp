#include "lipmab/rng.hpp"

namespace lipmab {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                          std::uint64_t index) noexcept {
  const std::uint64_t a = mix64(master ^ mix64(fnv1a64(role)));
  return mix64(a ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

}  // namespace lipmab
