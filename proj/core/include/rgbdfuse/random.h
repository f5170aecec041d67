#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace rgbdfuse {

// Seeded generator with distribution helpers whose output is fixed by this
// code rather than by the standard library implementation, so a seed yields
// the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform in [0, n). n must be positive.
  std::size_t Index(std::size_t n);

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t SplitMix64(std::uint64_t x);

// Derives a decorrelated sub-seed from a master seed and a stable label.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label);

}  // namespace rgbdfuse
