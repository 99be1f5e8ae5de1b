#pragma once

#include <cmath>
#include <cstdint>

namespace lassokit {

// SplitMix64: counter-based 64-bit generator.  The t-th output is a pure bit
// mix of (seed + t * 0x9E3779B97F4A7C15); regeneration from a seed is
// bit-identical on every platform and stream position is just the counter.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in the open interval (0, 1): top 53 bits offset by half an ulp,
  // so the result is never exactly 0 or 1 (safe under log()).
  double uniform_open01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
};

// Derive an independent substream token (e.g. per trial) from a master seed:
// the SplitMix64 finalizer applied to master + (index + 1) * golden ratio.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Standard normal stream: Box-Muller transform over pairs of open-interval
// uniforms from SplitMix64.  Both values of each pair are consumed, so the
// draw sequence is a deterministic function of the seed alone.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = rng_.uniform_open01();
    double u2 = rng_.uniform_open01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.2831853071795864769252867665590 * u2;  // 2*pi
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lassokit
