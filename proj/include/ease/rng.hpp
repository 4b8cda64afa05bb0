#pragma once

#include <cstdint>

// Deterministic, platform-independent random numbers. Streams are derived
// from a master seed with a splitmix chain so that per-replication and
// per-fold generators are independent of execution order and worker count.

namespace ease {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from (master, a, b, c); stable by construction.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x517cc1b727220a95ULL;
  h ^= splitmix64(s);
  s ^= b + 0x2545f4914f6cdd1dULL;
  h ^= splitmix64(s);
  s ^= c + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  return h;
}

// xoshiro256++ with splitmix-expanded seeding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0,1) with 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), safe to feed into quantile functions
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via the inverse CDF (keeps draws platform-stable)
  double normal();

  // uniform integer in [0, bound) by rejection (unbiased)
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace ease
