#pragma once

#include <cmath>
#include <cstdint>

namespace vsg {

// Counter-based splitmix64 stream. Every consumer of randomness takes an
// explicit Rng; child streams are derived with fork() so that environment,
// sampling and parameter-init randomness all descend from one master seed.
// No <random> distributions are used anywhere: their output is
// implementation-defined, which would break replayability.
class Rng {
 public:
  // The seed is avalanched before use so that nearby seeds (seed, seed+1)
  // yield unrelated streams rather than shifted copies of one sequence.
  explicit Rng(uint64_t seed) : state_(premix(seed)) {}

  static uint64_t premix(uint64_t z) {
    z ^= 0x2545f4914f6cdd1dull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Deterministic child stream; independent of the parent's future draws.
  Rng fork(uint64_t stream) {
    uint64_t z = state_ ^ (0x6a09e667f3bcc909ull + stream * 0xd1b54a32d192ed03ull);
    z = (z ^ (z >> 32)) * 0xd6e8feb86659fd93ull;
    z = (z ^ (z >> 32)) * 0xd6e8feb86659fd93ull;
    return Rng(z ^ (z >> 32));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (cached spare value).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  float normal_f() { return static_cast<float>(normal()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vsg
