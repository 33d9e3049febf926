#ifndef SPIRO_RNG_H_
#define SPIRO_RNG_H_

#include <cstdint>
#include <limits>

namespace spiro {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream key from a user seed and up to two counters
// (e.g. participant ordinal, bootstrap replicate). Streams derived this way
// never depend on evaluation order, which is what makes parallel runs
// reproduce serial ones bit for bit.
constexpr std::uint64_t StreamKey(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b = 0) {
  return Mix64(Mix64(Mix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

// Counter-based generator: output n is Mix64(key + n * gamma). Satisfies
// std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    return Mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double Uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform index in [0, n). Lemire's multiply-shift; the bias for the
  // sample sizes used here is below 2^-40.
  std::uint64_t Index(std::uint64_t n) {
    __extension__ using Wide = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<Wide>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace spiro

#endif  // SPIRO_RNG_H_
