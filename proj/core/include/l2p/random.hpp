#pragma once

#include <cstdint>

namespace l2p {

/// Portable elementary functions built only from IEEE-754 basic operations, so
/// generated data does not depend on the platform libm. Accuracy is a few ulp
/// over the ranges the generators use.
namespace detmath {
double exp(double x);
double log(double x);
double sin(double x);
double cos(double x);
}  // namespace detmath

/// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, Weyl increment
/// 0x9E3779B97F4A7C15, finalizer with multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB. Gaussians use the Marsaglia polar method on top of
/// 53-bit uniforms, with the spare deviate cached.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a base seed with a stream id so sub-generators do not overlap.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace l2p
