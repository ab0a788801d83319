#pragma once

#include <cmath>
#include <cstdint>

namespace phasemem {

/// Deterministic xoshiro256++ generator. Identical seeds give identical
/// streams on every platform, which is what makes rerun-equals-rerun hold
/// for the whole toolchain. Distributions are hand-rolled for the same reason:
/// std::normal_distribution is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    // splitmix64 expansion of the seed into the four-word state
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  /// Standard normal via polar Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  /// Exponential with unit mean.
  double exponential() { return -std::log(uniform_pos()); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Independent substream keyed off the original seed, e.g. one per
  /// realization. Does not depend on how far this stream has advanced.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    std::uint64_t mixed = splitmix(x);
    return Rng(mixed);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_ = 0;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace phasemem
