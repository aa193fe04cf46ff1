#include "trawlsbi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace trawlsbi {

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  have_cached_normal_ = true;
  return u * f;
}

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0)
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Boost to shape >= 1 (Marsaglia-Tsang augmentation).
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v / rate;
  }
}

double Rng::inverse_gaussian(double gamma_par, double delta) {
  if (gamma_par <= 0.0 || delta <= 0.0)
    throw std::invalid_argument("inverse_gaussian: parameters must be positive");
  // Michael-Schucany-Haas; mean m = delta/gamma, shape lambda = delta^2.
  const double m = delta / gamma_par;
  const double lam = delta * delta;
  const double nu = normal();
  const double y = nu * nu;
  // Smaller root of the quadratic, written without cancellation so it stays
  // nonnegative even when lam is many orders below m*y.
  const double w = m * y;
  const double s = std::sqrt(w * (w + 4.0 * lam));
  const double x = (w == 0.0) ? m : 4.0 * lam * m * w / ((s + w) * (s + w));
  if (uniform() <= m / (m + x)) return x;
  return m * m / x;
}

long Rng::poisson(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("poisson: lambda < 0");
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) {
    // Multiplication of uniforms.
    const double l = std::exp(-lambda);
    long k = 0;
    double p = uniform();
    while (p > l) {
      ++k;
      p *= uniform();
    }
    return k;
  }
  // Hormann's PTRS transformed rejection.
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lam = std::log(lambda);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * log_lam - lambda - std::lgamma(kf + 1.0))
      return static_cast<long>(kf);
  }
}

}  // namespace trawlsbi
