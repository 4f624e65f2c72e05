#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace evotrend {

// Deterministic random stream. Every draw goes through explicit helpers so
// results depend only on the seed and the draw sequence, never on the
// standard library's distribution implementations (which are unspecified).
//
// Each run owns private streams; nothing here is shared.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the polar method. The spare value is discarded so
  // stream state is a pure function of the number of draws requested.
  double gaussian() {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double gaussian(double mean, double sigma) {
    return mean + sigma * gaussian();
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace evotrend
