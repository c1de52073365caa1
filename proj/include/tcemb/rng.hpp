#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace tcemb {

/// Seeded xoshiro256++ generator. All randomness in the library flows
/// through this type so that a fixed seed reproduces the exact draw
/// sequence across runs. Single-owner: never share one instance across
/// concurrent callers; derive children instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (second draw cached).
  double normal();

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Child generator whose stream is determined by this rng's seed and
  /// the label. Used to fan one run seed out to pipeline stages.
  Rng derive(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Stage seed = splitmix64(seed xor fnv1a64(stage)). Documented so that
/// external tools can reproduce per-stage streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace tcemb
