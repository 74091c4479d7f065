// Deterministic random source used across the optimizer and the simulator.
//
// Draws are produced by explicit inversion formulas on top of mt19937_64 so
// that streams are reproducible bit-for-bit regardless of the standard
// library's distribution internals.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace drmech {

// splitmix64 finalizer; used to decorrelate derived seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Strictly positive uniform on (0, 1).
  double uniform01_pos() {
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return u;
  }

  // Standard exponential via inversion, strictly positive.
  double exponential() { return -std::log(uniform01_pos()); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection-free modulo is biased for huge n; n here is always tiny.
    return engine_() % n;
  }

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace drmech
