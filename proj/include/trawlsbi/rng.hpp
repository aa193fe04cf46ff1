#pragma once

#include <cstdint>
#include <random>

namespace trawlsbi {

// Deterministic random source. All samplers are implemented in-repo so that
// a given seed reproduces the same stream regardless of the standard
// library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix(seed)) {}

  // Independent stream derived from (seed, stream_id); used for parallel
  // simulation where each worker needs its own generator.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix(seed) ^ mix(stream_id * 0x9e3779b97f4a7c15ULL + 1));
  }

  std::uint64_t raw() { return eng_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double gamma(double shape, double rate);
  // Inverse Gaussian with density d*exp(d*g)/sqrt(2*pi) x^{-3/2}
  // exp(-(d^2/x + g^2 x)/2); mean d/g.
  double inverse_gaussian(double gamma_par, double delta);
  long poisson(double lambda);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace trawlsbi
