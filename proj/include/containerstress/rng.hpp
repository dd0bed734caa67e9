#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cstress {

/// Name recorded in exported run metadata so results can be tied to the
/// exact generator algorithm.
inline constexpr const char* kRngAlgorithm = "splitmix64-v1/box-muller";

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Used both as the
/// stream generator core and as the mixing step for seed derivation.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a list of coordinates
/// (grid indices, replicate numbers, channel ids, ...). Iterated
/// SplitMix64 mixing; order-sensitive and collision-resistant enough
/// for stream separation.
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64_mix(parent);
  for (std::uint64_t c : coords) {
    h = splitmix64_mix(h ^ splitmix64_mix(c));
  }
  return h;
}

/// Minimal counter-style PRNG: the SplitMix64 sequence.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Standard-normal stream on top of SplitMix64 via the Box-Muller
/// transform. Deterministic given the seed.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(rng_.next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = rng_.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  SplitMix64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cstress
