#ifndef LIEKIT_RNG_HPP
#define LIEKIT_RNG_HPP

// Deterministic random numbers for tests and trial sampling.  Everything is
// built from raw mt19937_64 output so the streams are identical across
// platforms and standard libraries (std::uniform_real_distribution is not).

#include <cstdint>
#include <random>

namespace liekit {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  // Uniform in [0, 1), using the top 53 bits of one engine draw.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t bits() { return eng_(); }

  // Uniform integer in [0, n), bias-free via power-of-two rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      std::uint64_t v = eng_() & mask;
      if (v < n) return v;
    }
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Child stream number `stream`, derived from the construction seed alone.
  // fork(k) returns the same stream regardless of how much this generator
  // has already been used, so parallel trial k draws the same numbers no
  // matter how iterations are scheduled.
  Rng fork(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace liekit

#endif
