#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every random decision in the lab is drawn from a stream addressed by
// (key, domain, replica, ordinal). The key is the 64-bit root seed; the
// remaining words select an independent substream, so the numbers a particle
// sees never depend on how replicas are scheduled across workers.

#include <array>
#include <cstdint>
#include <limits>

namespace idla {

/// Philox4x32 with 10 rounds. Maps a 128-bit counter and a 64-bit key to
/// 128 bits of output.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
};

/// Which part of the lab a stream belongs to. Distinct domains never share
/// counters even under the same root seed.
enum class StreamDomain : std::uint32_t {
  kEnvironment = 1,
  kParticle = 2,
  kSampling = 3,
  kBootstrap = 4,
};

/// A single substream. Satisfies UniformRandomBitGenerator (32-bit words),
/// and adds exact bounded draws that are identical on every platform.
class Stream {
 public:
  using result_type = std::uint32_t;

  /// `lane` separates independent roles inside one domain (< 2^24).
  Stream(std::uint64_t key, StreamDomain domain, std::uint32_t replica,
         std::uint32_t ordinal, std::uint32_t lane = 0)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0, ordinal, replica, static_cast<std::uint32_t>(domain) | (lane << 8)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (word_ == 4) refill();
    return buffer_[word_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = (*this)();
    const std::uint64_t hi = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// `count` fresh random bits, count <= 32.
  std::uint32_t bits(int count) {
    if (available_ < count) {
      pool_ = next_u64();
      available_ = 64;
    }
    const auto out = static_cast<std::uint32_t>(pool_ & ((std::uint64_t{1} << count) - 1));
    pool_ >>= count;
    available_ -= count;
    return out;
  }

  /// Uniform on {0, ..., n-1} by rejection on the minimal number of bits.
  /// Requires 1 <= n <= 2^31.
  std::uint32_t below(std::uint32_t n) {
    if (n <= 1) return 0;
    const int width = 32 - __builtin_clz(n - 1);
    for (;;) {
      const std::uint32_t candidate = bits(width);
      if (candidate < n) return candidate;
    }
  }

 private:
  void refill() {
    buffer_ = Philox4x32::block(counter_, key_);
    ++counter_[0];
    word_ = 0;
  }

  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int word_ = 4;
  std::uint64_t pool_ = 0;
  int available_ = 0;
};

}  // namespace idla
