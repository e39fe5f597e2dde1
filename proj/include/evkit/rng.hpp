#pragma once

#include <cstdint>
#include <random>

namespace evkit {

/// Seedable generator that can be split into independent, named substreams.
/// A child depends only on (parent key, stream id), never on how many values
/// the parent has already produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed)), engine_(key_) {}

  Rng split(std::uint64_t stream_id) const { return Rng(key_, stream_id); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const noexcept { return key_; }

 private:
  Rng(std::uint64_t parent_key, std::uint64_t stream_id)
      : key_(mix(parent_key ^ mix(stream_id + 0x9E3779B97F4A7C15ULL))), engine_(key_) {}

  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

inline std::uint64_t Rng::mix(std::uint64_t z) {
  // splitmix64 finalizer
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

}  // namespace evkit
