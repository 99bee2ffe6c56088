#pragma once

#include <cstdint>
#include <cmath>

namespace gsmix {

// Deterministic RNG used across the library. Normal variates go through an
// explicit Box-Muller transform instead of std::normal_distribution so that
// streams are identical for a given seed on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed ? seed : 0x9e3779b97f4a7c15ull)) {
    // warm up the generator state
    for (int i = 0; i < 8; ++i) next();
  }

  // derive an independent stream, e.g. one per worker or sweep cell
  static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(splitmix(seed + 0x9e3779b97f4a7c15ull * (stream_id + 1)));
  }

  std::uint64_t next() {
    // xorshift* variant
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dull;
  }

  // uniform in (0, 1)
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // categorical draw from cumulative weights (last entry == 1)
  int categorical(const double* cumw, int k) {
    double u = uniform();
    for (int i = 0; i < k - 1; ++i)
      if (u <= cumw[i]) return i;
    return k - 1;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gsmix
