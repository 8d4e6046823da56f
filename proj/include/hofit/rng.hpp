#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace hofit {

// Deterministic random source. The mt19937_64 engine is fully specified by the
// standard; the distribution transforms below are ours, so identical seeds give
// identical streams on every platform. Standard-library distributions are
// implementation-defined and must not be used anywhere determinism matters.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive bounds.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller without caching the second value; wasteful but keeps the
  // consumption pattern independent of call interleaving.
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  Eigen::Vector2d gaussian2(double stddev = 1.0) {
    return {gaussian(0.0, stddev), gaussian(0.0, stddev)};
  }

  Eigen::Vector3d gaussian3(double stddev = 1.0) {
    return {gaussian(0.0, stddev), gaussian(0.0, stddev),
            gaussian(0.0, stddev)};
  }

  Eigen::Vector3d unit_vector() {
    // Marsaglia rejection on the cube.
    for (;;) {
      Eigen::Vector3d v(uniform(-1.0, 1.0), uniform(-1.0, 1.0),
                        uniform(-1.0, 1.0));
      const double n = v.norm();
      if (n > 1e-6 && n <= 1.0) return v / n;
    }
  }

  // SplitMix64 step; used to derive independent substream seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hofit
