#pragma once

#include <cstdint>

namespace bbeval {

// Counter-based random stream.
//
// Every draw is a pure function of (key, counter): draw k of stream K is
// mix(K + kGamma*(k+1)), the SplitMix64 output function over a Weyl sequence.
// Two properties matter here:
//   * replayability: a stream is fully determined by its 64-bit key, so a
//     recorded master seed reproduces an entire experiment bit-for-bit;
//   * forkability: substream(i) derives an independently-keyed child stream,
//     which lets Monte Carlo trial t own stream (master, t) regardless of
//     which worker thread executes it or in what order.
class RngStream {
 public:
  RngStream() : key_(0) {}
  explicit RngStream(uint64_t key) : key_(key) {}

  uint64_t key() const { return key_; }

  // Next raw 64-bit draw.
  uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

  // Next draw mapped to [0,1) as u / 2^64.
  double next_unit() { return to_unit(next_u64()); }

  // Uniform integer in [0, n). Rejection-free multiply-shift; the bias of
  // ~n/2^64 is far below anything observable at desk scale.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Independent child stream; does not advance this stream.
  RngStream substream(uint64_t index) const {
    return RngStream(mix(key_ ^ mix(index + kGamma)));
  }

  static double to_unit(uint64_t u) {
    // Top 53 bits -> [0,1). (Dividing by 2^64 would round u = 2^64 - 1 up
    // to exactly 1.0.)
    return static_cast<double>(u >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  // SplitMix64 finalizer (Steele, Lea, Flood 2014).
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace bbeval
