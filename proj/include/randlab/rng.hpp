#pragma once

#include <cstdint>

namespace randlab {

// SplitMix64 stream (Steele, Lea & Flood; Vigna's fixed-increment variant).
// Chosen for reproducible parallel work: every derived quantity below is a
// pure function of the 64-bit seed, with no platform- or libc-dependent
// code paths, so identical seeds give identical streams everywhere.
//
//   next_u64      : state += 0x9E3779B97F4A7C15, then the two-round mixer.
//   next_unit     : top 53 bits scaled to [0, 1).
//   next_open_unit: (53 bits + 1/2) scaled, never exactly 0 or 1.
//   next_gaussian : normal_quantile(next_open_unit()) -- inverse-CDF
//                   transform, exactly one uniform per gaussian.
//   substream(k)  : an independent stream derived from the *construction*
//                   seed, mix(mix(seed ^ 0x9E3779B97F4A7C15) + (k+1) *
//                   0xBF58476D1CE4E5B9); advancing the parent never moves
//                   its substreams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();
  double next_unit();
  double next_open_unit();
  double next_gaussian();

  // Unbiased uniform draw from {0, ..., bound-1}; bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  Rng substream(std::uint64_t key) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace randlab
