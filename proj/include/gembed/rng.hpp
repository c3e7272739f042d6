#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gembed {

/// splitmix64 finalizer; used to derive well-separated stream seeds from
/// (seed_base, replicate, purpose) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purpose tags for per-replicate generator streams.
enum class StreamPurpose : std::uint64_t {
  Model = 1,
  Sigma = 2,
  Train = 3,
  Val = 4,
  Test = 5,
};

/// seed = seed_base xor hash(replicate, purpose). The hash is two chained
/// splitmix64 finalizer passes, so nearby replicate indices map to
/// unrelated seeds.
inline std::uint64_t derive_seed(std::uint64_t seed_base, std::uint64_t replicate,
                                 StreamPurpose purpose) {
  return seed_base ^ mix64(mix64(replicate) + static_cast<std::uint64_t>(purpose));
}

/// Deterministic random stream: mt19937_64 (algorithm fixed by the standard)
/// plus a Box-Muller normal transform. std::normal_distribution is not
/// portable across standard libraries, so the transform is spelled out here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; generates pairs, caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gembed
