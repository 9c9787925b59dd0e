#ifndef VFC_PRNG_HPP
#define VFC_PRNG_HPP

#include <cstdint>

namespace vfc {

// xoshiro256** seeded through splitmix64. Deterministic across platforms,
// which the byte-identical report requirement depends on.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0,n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Derive an independent stream; used to hand each branch its own seed.
  Prng split(std::uint64_t salt) { return Prng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL)); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace vfc

#endif
