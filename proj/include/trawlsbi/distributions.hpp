#pragma once

#include <string>
#include <vector>

#include "trawlsbi/rng.hpp"

namespace trawlsbi {

// Levy seed families. Parameters follow the canonical order:
//   Poisson(lambda)
//   Gamma(alpha, beta)                      shape/rate
//   Gaussian(mu, sigma2)
//   InverseGaussian(gamma, delta)
//   NIG4(alpha, beta, delta, mu)
//   VG(alpha, beta, lambda, mu)
//   GH(lambda, alpha, beta, delta, mu)
enum class SeedFamily {
  Poisson,
  Gamma,
  Gaussian,
  InverseGaussian,
  NIG4,
  VG,
  GH
};

std::string to_string(SeedFamily f);
SeedFamily seed_family_from_string(const std::string& s);

struct SeedSpec {
  SeedFamily family;
  std::vector<double> params;

  // Throws std::invalid_argument on domain violations.
  void validate() const;
};

// Three-parameter NIG: mean mu, standard deviation sigma, tilt beta in [-5,5].
struct Nig3Params {
  double mu = 0.0;
  double sigma = 1.0;
  double beta = 0.0;
};

// Density of the seed law at x. NIG/VG/GH evaluate a modified Bessel K
// internally. Discrete families (Poisson) take integer x.
double density(const SeedSpec& spec, double x);
double log_density(const SeedSpec& spec, double x);

// Law of L(A) for Leb(A) = leb under convolution-closed scaling.
// GH is not convolution-closed and throws.
SeedSpec scale_by_area(const SeedSpec& spec, double leb);

// One draw from scale_by_area(spec, leb). NIG is drawn as a normal
// variance-mean mixture with an inverse-Gaussian subordinator, VG with a
// gamma subordinator.
double sample(const SeedSpec& spec, double leb, Rng& rng);

// Exact location-scale embedding of the three-parameter NIG into the
// four-parameter family, so that the result has mean mu and variance sigma^2.
SeedSpec nig3_to_nig4(const Nig3Params& p);

struct Moments {
  double mean;
  double variance;
};

// Mean and variance of a NIG4 spec: mean = mu + delta*beta/gamma,
// variance = delta*alpha^2/gamma^3 with gamma = sqrt(alpha^2 - beta^2).
Moments nig_moments(const SeedSpec& spec);

// Analytic mean/variance of the seed law for any supported family.
Moments seed_moments(const SeedSpec& spec);

// Standardized skewness and excess kurtosis of the three-parameter NIG;
// location-scale invariant, so they depend on beta only.
double nig3_skewness(double beta);
double nig3_excess_kurtosis(double beta);

}  // namespace trawlsbi
