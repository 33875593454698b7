#pragma once

#include <cmath>
#include <cstdint>

namespace nvrr {

// splitmix64 stream (Steele/Lea/Flood; Vigna's fixed-increment variant).
// Streams are derived from (master seed, stream index) by hashing, so any
// trajectory, calibration batch, or training run owns an independent,
// order-free generator: results do not depend on worker count or scheduling.
// Scheme identifier recorded in manifests: "splitmix64-derive-v1".
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {}

  static RngStream derive(uint64_t master, uint64_t stream) {
    uint64_t s = master ^ mix(stream + 0x9E3779B97F4A7C15ULL);
    return RngStream(mix(s));
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix_output(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Exponential with the given rate (per us); rate must be > 0.
  double exponential(double rate) { return -std::log1p(-next_double()) / rate; }

  // Uniform integer in [0, n), Lemire multiply-shift with rejection.
  uint64_t uniform_below(uint64_t n) {
    const uint64_t threshold = (-n) % n;
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
      if (static_cast<uint64_t>(m) >= threshold) return static_cast<uint64_t>(m >> 64);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static uint64_t mix_output(uint64_t z) { return mix(z); }

  uint64_t state_;
};

}  // namespace nvrr
