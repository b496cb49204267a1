#pragma once

// Counter-based random numbers (Philox4x32-10).
//
// A stream is keyed by (master seed, run id). Every draw is addressed by
// (iteration, substream, index), so the value of a draw never depends on how
// many other draws happened before it or on which thread computed it.

#include <array>
#include <cstdint>
#include <limits>

namespace glopt {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Substreams used by the optimization loops.
enum class Substream : std::uint32_t { oracle = 0, segment = 1, stream = 2, aux = 3 };

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t run_id = 0) noexcept
      : seed_(seed), run_id_(run_id) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(run_id + 0x632BE59BD9B4E019ull));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t run_id() const noexcept { return run_id_; }

  // 128 random bits for the given address. `block` selects a group of four words.
  Philox4x32Counter block(std::uint64_t iteration, Substream sub, std::uint32_t block) const noexcept {
    return philox4x32({static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32),
                       static_cast<std::uint32_t>(sub), block},
                      key_);
  }

  std::uint64_t bits64(std::uint64_t iteration, Substream sub, std::uint32_t index) const noexcept {
    const auto b = block(iteration, sub, index / 2);
    const std::size_t o = 2 * (index % 2);
    return (static_cast<std::uint64_t>(b[o]) << 32) | b[o + 1];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01(std::uint64_t iteration, Substream sub, std::uint32_t index) const noexcept {
    return static_cast<double>(bits64(iteration, sub, index) >> 11) * 0x1.0p-53;
  }

  bool coin(std::uint64_t iteration, Substream sub, std::uint32_t index) const noexcept {
    const auto b = block(iteration, sub, index / 128);
    const std::uint32_t bit = index % 128;
    return (b[bit / 32] >> (bit % 32)) & 1u;
  }

  // +1 or -1 with equal probability.
  double rademacher(std::uint64_t iteration, Substream sub, std::uint32_t index) const noexcept {
    return coin(iteration, sub, index) ? 1.0 : -1.0;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t run_id_ = 0;
  Philox4x32Key key_{};
};

// Sequential engine over one substream, usable with <random> distributions.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit PhiloxEngine(std::uint64_t seed, std::uint64_t run_id = 0, Substream sub = Substream::aux)
      : stream_(seed, run_id), sub_(sub) {}

  result_type operator()() noexcept {
    const std::uint64_t i = next_++;
    return stream_.bits64(i >> 31, sub_, static_cast<std::uint32_t>(i & 0x7FFFFFFFu));
  }

  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  RngStream stream_;
  Substream sub_;
  std::uint64_t next_ = 0;
};

}  // namespace glopt
