#include "randlab/rng.hpp"

#include "randlab/error.hpp"
#include "randlab/normal.hpp"

namespace randlab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix(state_);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open_unit() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::next_gaussian() { return normal_quantile(next_open_unit()); }

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::invalid_argument, "next_below requires bound >= 1");
  // Accept only the top slice that is an exact multiple of bound.
  const std::uint64_t threshold = -bound % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

Rng Rng::substream(std::uint64_t key) const {
  return Rng(mix(mix(seed_ ^ kGolden) + (key + 1) * 0xBF58476D1CE4E5B9ull));
}

}  // namespace randlab
