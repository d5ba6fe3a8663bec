#pragma once

#include <cmath>
#include <cstdint>

namespace fresco {

// splitmix64; deterministic across platforms, unlike <random> distributions.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Rng {
  std::uint64_t state = 0x853C49E6748FEA9Bull;

  explicit Rng(std::uint64_t seed = 0) : state(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull) {}

  std::uint64_t next_u64() { return splitmix64(state); }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t range(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Box-Muller, one value per call (the pair's second half is discarded to
  // keep call sequences independent of consumption pattern).
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

// Stable derivation of independent streams from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master ^ (a * 0xA24BAED4963EE407ull) ^ (b * 0x9FB21C651E98DF25ull);
  splitmix64(s);
  return splitmix64(s);
}

}  // namespace fresco
