#pragma once

#include <cmath>
#include <cstdint>

namespace lawn {

// Counter-based generator: every draw is a pure function of
// (seed, channel, i, j, k), independent of call order. This keeps
// simulations bit-reproducible whether the per-agent loops run
// serially or in parallel.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  uint64_t seed() const { return seed_; }

  // uniform in [0, 1)
  double uniform(uint64_t channel, uint64_t i = 0, uint64_t j = 0,
                 uint64_t k = 0) const {
    return to_unit(word(channel, i, j, k, 0));
  }

  double uniform(double lo, double hi, uint64_t channel, uint64_t i = 0,
                 uint64_t j = 0, uint64_t k = 0) const {
    return lo + (hi - lo) * uniform(channel, i, j, k);
  }

  // standard normal via Box-Muller on two decorrelated words
  double std_normal(uint64_t channel, uint64_t i = 0, uint64_t j = 0,
                    uint64_t k = 0) const {
    const double u1 = 1.0 - to_unit(word(channel, i, j, k, 1));  // (0, 1]
    const double u2 = to_unit(word(channel, i, j, k, 2));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev, uint64_t channel, uint64_t i = 0,
                uint64_t j = 0, uint64_t k = 0) const {
    return mean + stddev * std_normal(channel, i, j, k);
  }

  // fair coin as ±1
  int sign(uint64_t channel, uint64_t i = 0, uint64_t j = 0,
           uint64_t k = 0) const {
    return (word(channel, i, j, k, 3) & 1u) ? 1 : -1;
  }

 private:
  static uint64_t mix(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  uint64_t word(uint64_t channel, uint64_t i, uint64_t j, uint64_t k,
                uint64_t sub) const {
    uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc908ull);
    h = mix(h ^ channel);
    h = mix(h ^ i);
    h = mix(h ^ j);
    h = mix(h ^ k);
    return mix(h ^ sub);
  }

  static double to_unit(uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
  }

  uint64_t seed_;
};

}  // namespace lawn
