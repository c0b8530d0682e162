#pragma once

#include <cstdint>

#include "neyman/numeric.hpp"

namespace neyman {

// SplitMix64 (Steele, Lea & Flood; public-domain reference by Vigna).
// Chosen over std::mt19937_64 because the whole state is one word, the
// output function is a pure finalizer, and substreams can be derived in
// closed form, which keeps replications independent of thread schedule.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1): top 53 bits scaled by 2^-53.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1); safe to feed through a quantile.
  double uniform_open01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Inverse-CDF sampling so normal draws are reproducible bit-for-bit and
  // consume exactly one generator step each.
  double normal(double mean, double sd) {
    return mean + sd * normal_quantile(uniform_open01());
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Generator for substream `index` of a master seed. The state is the
// index-th raw output of SplitMix64(seed), computed directly from the
// counter, so substreams can be created in any order (or concurrently)
// and always coincide.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t counter_state =
      seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
  return SplitMix64(detail::splitmix_finalize(counter_state));
}

}  // namespace neyman
