#pragma once

#include <cmath>
#include <cstdint>

namespace tim4rec {

// Counter-based pseudo-random generator (splitmix64 finalizer over a keyed
// counter). Stateless apart from the counter, so a (seed, stream, counter)
// triple always yields the same value: dropout masks, parameter init and
// shuffles are reproducible bit-for-bit and independent streams can be forked
// without sharing state.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : key_(mix(seed ^ mix(0x9E3779B97F4A7C15ull * (stream + 1)))) {}

  uint64_t next_u64() {
    uint64_t z = key_ + 0x9E3779B97F4A7C15ull * ++counter_;
    return mix(z);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Draws two uniforms per value; the second
  // branch is discarded to keep the draw count independent of call history.
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n used
  // here (shuffles, sampling) and keeps the draw count fixed.
  uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Independent generator derived from this one's key and a stream id.
  Rng fork(uint64_t stream) const { return Rng(key_, stream + 1); }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

// Fisher-Yates shuffle with a caller-supplied generator.
template <class Container>
void shuffle(Container& c, Rng& rng) {
  for (size_t i = c.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_int(i));
    std::swap(c[i - 1], c[j]);
  }
}

}  // namespace tim4rec
