#pragma once

#include <cmath>
#include <cstdint>

namespace manta {

/// SplitMix64 generator. Used instead of <random> engines so that streams are
/// bit-identical across platforms and cheap to fork per entity; every
/// stochastic component takes an explicit Rng so scenarios replay exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : init_seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool chance(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller (cached pair).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Child stream derived from the construction seed, independent of any
  /// draws already made on this generator. Forking with the same tag always
  /// yields the same stream, which is what couples perception noise across
  /// parameter sweeps.
  Rng fork(std::uint64_t stream) const { return Rng(mix(init_seed_, stream)); }

  Rng fork(std::uint64_t a, std::uint64_t b) const { return Rng(mix(mix(init_seed_, a), b)); }

  std::uint64_t seed() const { return init_seed_; }

 private:
  std::uint64_t init_seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace manta
