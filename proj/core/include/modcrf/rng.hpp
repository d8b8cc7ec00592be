#ifndef MODCRF_RNG_HPP
#define MODCRF_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Seeded randomness with hand-rolled draws. mt19937_64 output is pinned by
// the standard; the distribution helpers here avoid the library-defined
// std::uniform_* distributions so streams replay identically everywhere.

namespace modcrf {

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n); n > 0.
  uint64_t next_below(uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int next_int(int lo, int hi_inclusive) {
    return lo + int(next_below(uint64_t(hi_inclusive - lo + 1)));
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = size_t(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives an independent stream for a named purpose from a master seed.
  static Rng derive(uint64_t master_seed, const std::string& purpose) {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    for (unsigned char c : purpose) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return Rng(master_seed ^ h);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modcrf

#endif  // MODCRF_RNG_HPP
