#pragma once

#include <cstdint>
#include <initializer_list>

namespace capcon {

// splitmix64 step: advances `state` and returns a mixed 64-bit value.
// Chosen over std::mt19937 because its output is stable across platforms
// and standard-library versions, which the reproducibility contract needs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive hash of a seed with context words (node ids, ticks,
// trial indices). Used to derive per-trial and per-sample seeds so that
// every draw is a pure function of its numeric context.
inline std::uint64_t mix_seed(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = seed;
  (void)splitmix64(h);
  for (std::uint64_t w : words) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    h = splitmix64(s);
  }
  return h;
}

// Minimal deterministic stream generator over splitmix64.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  // Uniform draw in [0, bound) via 128-bit multiply (no modulo bias path).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

}  // namespace capcon
