#include "ease/rng.hpp"

#include "ease/stats.hpp"

namespace ease {

double Rng::normal() { return stats::normal_quantile(uniform_open()); }

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t threshold = (0ULL - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace ease
