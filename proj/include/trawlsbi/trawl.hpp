#pragma once

#include <cstdint>
#include <vector>

#include "trawlsbi/distributions.hpp"
#include "trawlsbi/rng.hpp"

namespace trawlsbi {

enum class KernelFamily { Exponential, InverseGaussian };

// Monotone trawl kernels a(s) on (-infty, 0] with closed-form ACF:
//   Exponential(lambda):  rho(h) = exp(-lambda h)
//   InverseGaussian(gamma, eta): rho(h) = exp(eta (1 - sqrt(1 + 2h/gamma^2)))
struct TrawlKernel {
  KernelFamily family = KernelFamily::Exponential;
  double lambda = 1.0;     // Exponential decay rate
  double gamma_acf = 1.0;  // IG kernel parameters
  double eta_acf = 1.0;

  static TrawlKernel exponential(double lambda);
  static TrawlKernel inverse_gaussian(double gamma_acf, double eta_acf);

  void validate() const;
};

// Autocorrelation at nonnegative lag h.
double acf(const TrawlKernel& kernel, double h);

// Lebesgue area of the trawl set, integral of a(s) over (-infty, 0].
// Closed form: 1/lambda (exponential), gamma^2/eta (inverse Gaussian).
double leb_area(const TrawlKernel& kernel);

// Trawl function a(s) for s <= 0 (used by the quadrature cross-checks).
double trawl_function(const TrawlKernel& kernel, double s);

struct TimeSeries {
  std::vector<double> values;
  double dt = 1.0;
};

struct TrawlModel {
  TrawlKernel kernel;
  SeedSpec seed;  // law on a unit-area set
  double dt = 1.0;
  double truncation_eps = 1e-4;
  // Guard against pathological configurations: simulate() refuses runs where
  // (k + T) * (T + 1) exceeds this draw budget.
  std::uint64_t max_cells = 2'000'000'000ULL;

  TrawlModel(TrawlKernel k, SeedSpec s, double dt_ = 1.0,
             double eps = 1e-4);
  // Routes a three-parameter NIG through nig3_to_nig4 and rescales it so
  // the stationary marginal (area leb_A) is exactly NIG(mu, sigma, beta).
  TrawlModel(TrawlKernel k, const Nig3Params& marginal, double dt_ = 1.0,
             double eps = 1e-4);

  // Truncation lag: smallest j with acf(j dt) < truncation_eps.
  int truncation_lag() const;
};

// Disjoint slice-cell areas d[0..T]: d_j = c_j - 2 c_{j+1} + c_{j+2} with
// c_j = leb_A * acf(j dt); the tail cell absorbs the remainder so that
// sum (j+1) d_j = c_0 exactly.
std::vector<double> slice_areas(const TrawlModel& model);

// Grid-based simulation: X_i = sum_j sum_{m=i-j..i} Z_{m,j} with
// Z_{m,j} iid seed draws on area d_j. Stationary with marginal
// scale_by_area(seed, leb_A) and Corr(X_i, X_{i+h}) = acf(h dt) up to
// truncation error.
TimeSeries simulate(const TrawlModel& model, std::size_t k, Rng& rng);

struct StandardizedSeries {
  TimeSeries series;
  double mean;
  double sd;  // sample standard deviation (n-1 denominator)
};

StandardizedSeries standardize(const TimeSeries& series);

}  // namespace trawlsbi
