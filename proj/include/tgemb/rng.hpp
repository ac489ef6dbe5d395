#pragma once

#include <cstdint>
#include <random>

namespace tgemb {

// Seeded RNG. All draws go through the raw 64-bit engine output instead of
// std:: distributions, whose algorithms differ between standard libraries;
// identical seeds must reproduce identical streams everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), n > 0. Multiply-shift; bias is negligible for n << 2^64.
  int64_t uniform_int(int64_t n) {
    const auto wide = static_cast<unsigned __int128>(gen_());
    return static_cast<int64_t>((wide * static_cast<unsigned __int128>(n)) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tgemb
