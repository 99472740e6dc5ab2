#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace casebase {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to derive independent stream keys from a seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based generator. The 128-bit Philox counter is (draw index, stream);
/// the key is the seed. Any draw can be reproduced from (seed, stream, index)
/// alone, which is what makes chunked generation order-independent.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Jump to block `index`; subsequent draws come from that block onward.
  void seek(std::uint64_t index) noexcept {
    block_ = index;
    buffered_ = 0;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  double uniform() noexcept;             // [0, 1)
  double uniform_open_low() noexcept;    // (0, 1]
  double exponential() noexcept;         // rate 1
  double normal() noexcept;              // standard normal, Box-Muller
  bool bernoulli(double p) noexcept { return uniform() < p; }
  std::uint64_t below(std::uint64_t n) noexcept;  // uniform in [0, n)

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

// Stream tags keep unrelated consumers of one user seed apart.
namespace streams {
inline constexpr std::uint64_t sampling = 0x5a4d504c45ULL;
inline constexpr std::uint64_t simulation = 0x53494d554cULL;
inline constexpr std::uint64_t jitter = 0x4a49545445ULL;
inline constexpr std::uint64_t folds = 0x464f4c4453ULL;
inline constexpr std::uint64_t monte_carlo = 0x4d4f4e5445ULL;
}  // namespace streams

}  // namespace casebase
