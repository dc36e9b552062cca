#pragma once

#include <cstdint>
#include <string_view>

namespace hiresim {

namespace detail {

// SplitMix64 finalizer (Vigna). Bijective on uint64.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kChildTag = 0x8f2d3a5c71b64e09ULL;

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Counter-based pseudo-random stream with deterministic splitting.
///
/// A stream is identified by a 64-bit key; `next_*` walks a SplitMix64
/// sequence from that key. Children are derived from the key alone, never
/// from the consumption position, so `child(i)` yields the same substream
/// no matter how much of the parent has been consumed. That is what makes
/// per-candidate / per-replication substreams order- and thread-independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed)
      : key_(detail::mix64(seed ^ detail::kGolden)), pos_(0) {}

  RngStream child(std::uint64_t index) const {
    return RngStream(from_key_tag{},
                     detail::mix64(key_ ^ detail::mix64(index * detail::kGolden + detail::kChildTag)));
  }

  RngStream child(std::string_view label) const { return child(detail::fnv1a(label)); }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++pos_) * detail::kGolden); }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in the open interval (0, 1).
  double next_open_unit() {
    double u = next_unit();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

 private:
  struct from_key_tag {};
  RngStream(from_key_tag, std::uint64_t key) : key_(key), pos_(0) {}

  std::uint64_t key_;
  std::uint64_t pos_;
};

}  // namespace hiresim
