#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace regime_lq {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011). Each
/// (seed, stream, path) triple addresses an independent sequence, so any
/// path can be regenerated without replaying the others.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  Philox4x32(std::uint64_t seed, std::uint32_t stream, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0u, stream, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)} {}

  /// Ten rounds applied to one counter block.
  static Counter block(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  result_type operator()() {
    if (used_ == 4) {
      buffer_ = block(counter_, key_);
      ++counter_[0];
      used_ = 0;
    }
    return buffer_[used_++];
  }

  void discard(unsigned long long n) {
    while (n-- > 0) (*this)();
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  Key key_;
  Counter counter_;
  Counter buffer_{};
  int used_ = 4;
};

/// Stream identifiers inside one (seed, path) pair.
namespace streams {
inline constexpr std::uint32_t kBrownian = 0;
inline constexpr std::uint32_t kChain = 1;
inline constexpr std::uint32_t kAdversary = 2;
inline constexpr std::uint32_t kJumpBase = 3;  // component k uses kJumpBase + k
}  // namespace streams

}  // namespace regime_lq
