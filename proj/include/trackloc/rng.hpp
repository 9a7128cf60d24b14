#pragma once
#include <cstdint>
#include <cmath>

#include "trackloc/angles.hpp"

namespace trackloc::rng {

// splitmix64 finalizer: a single well-mixed 64->64 hash.
inline uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// Derive a sub-stream key. Order matters: split(a, b) != split(b, a).
inline uint64_t split(uint64_t key, uint64_t id) {
  return mix64(key + 0x9e3779b97f4a7c15ull * (id + 1));
}

// Counter-based generator: output i is mix64(key + i*gamma). Streams derived
// from (seed, id) pairs are independent of each other and of thread schedule,
// which is what keeps parallel sampling bit-reproducible.
class Stream {
 public:
  explicit Stream(uint64_t seed, uint64_t id = 0)
      : key_(split(seed, id)), ctr_(0) {}

  uint64_t next_u64() {
    ctr_ += 0x9e3779b97f4a7c15ull;
    return mix64(key_ + ctr_);
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // (0, 1]: avoids log(0) in Box-Muller
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Always consumes exactly two uniforms;
  // the sine branch is discarded so calls stay stateless.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) {
    // 53-bit mantissa path is plenty for the index ranges used here
    uint64_t v = static_cast<uint64_t>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

 private:
  uint64_t key_;
  uint64_t ctr_;
};

}  // namespace trackloc::rng
