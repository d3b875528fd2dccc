#pragma once

#include <cstdint>

namespace gwharm {

/// Splittable pseudo-random stream keyed by (seed, stream_id).
///
/// Identical (seed, stream_id) pairs always produce identical draw
/// sequences, independent of any other stream, which makes Monte Carlo
/// runs reproducible under any parallel schedule: every logical unit of
/// work (replica, purpose, node) owns a stream derived from the master
/// seed by key mixing rather than by sequential splitting.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        state_(mix(seed ^ mix(stream_id ^ 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derive an independent-quality stream for a sub-purpose.
  RngStream substream(std::uint64_t purpose) const {
    return RngStream(seed_, mix(stream_id_ + 0x632be59bd9b4e019ULL) ^ mix(purpose));
  }

  /// Mix two 64-bit keys into one; used by structures that address
  /// sub-streams through derived keys (e.g. per-vertex tree sampling).
  static std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
    return mix(a + 0x632be59bd9b4e019ULL) ^ mix(b);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    // Rejection from the top to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
};

}  // namespace gwharm
