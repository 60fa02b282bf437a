#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace schurtree {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// The stream is a pure function of (seed, stream id, draw index), so runs are
// bit-reproducible across platforms. Each 128-bit counter block yields two
// 64-bit outputs.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream),
                 static_cast<std::uint32_t>(stream >> 32)} {}

  result_type operator()() {
    if (next_ == 2) {
      buffer_ = generate(counter_, key_);
      increment();
      next_ = 0;
    }
    const std::size_t base = 2 * next_++;
    return static_cast<std::uint64_t>(buffer_[base]) |
           (static_cast<std::uint64_t>(buffer_[base + 1]) << 32);
  }

  // Skips `count` 64-bit outputs.
  void discard(std::uint64_t count) {
    while (count > 0) {
      (*this)();
      --count;
    }
  }

  // The raw bijection: ten rounds of Philox on one counter block.
  static Block generate(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  void increment() {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  Key key_;
  Block counter_;
  Block buffer_{};
  std::size_t next_ = 2;
};

// 64-bit generator with the full output range; needed so the helpers below
// can turn raw draws into doubles and indices without library-specific
// distribution objects (whose output is implementation defined).
template <class G>
concept FullRangeRng = std::uniform_random_bit_generator<G> &&
                       (G::min() == 0) &&
                       (G::max() == std::numeric_limits<std::uint64_t>::max());

// Uniform double in [0, 1) with 53 random bits.
template <FullRangeRng Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), unbiased by rejection.
template <FullRangeRng Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// Fair coin returning +1 or -1.
template <FullRangeRng Rng>
double random_sign(Rng& rng) {
  return (rng() >> 63) ? 1.0 : -1.0;
}

// Fisher-Yates.
template <class T, FullRangeRng Rng>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

// Per-item seed for fan-out runs (tree i of a batch gets seed ^ i).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return seed ^ index;
}

inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

}  // namespace schurtree
