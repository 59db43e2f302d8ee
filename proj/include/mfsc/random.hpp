#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mfsc {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Generator keyed by (seed, counter). Stream i does not depend on how many
// other streams were drawn, which gives prefix-stable (nested) samples.
// Transforms are implemented here rather than with <random> distributions so
// sequences are identical across standard library implementations.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t counter)
      : engine_(splitmix64(seed ^ splitmix64(counter + 0x632BE59BD9B4E019ULL))) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mfsc
