#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace resloco {

// Deterministic PRNG with hand-rolled distributions so that seeded runs
// reproduce bit-exactly regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    // splitmix64 to spread low-entropy seeds
    state_ = seed + 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 4; ++i) next();
    has_spare_ = false;
  }

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n)
  uint64_t uniform_int(uint64_t n) { return next() % n; }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // independent child stream, e.g. one per environment
  Rng split(uint64_t key) const {
    Rng child;
    child.state_ = state_ ^ (0x9e3779b97f4a7c15ULL * (key + 1));
    for (int i = 0; i < 4; ++i) child.next();
    child.has_spare_ = false;
    return child;
  }

 private:
  uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace resloco
