#pragma once

#include <vector>

#include "trawlsbi/distributions.hpp"
#include "trawlsbi/trawl.hpp"

namespace trawlsbi {

struct GmmConfig {
  int lags = 35;     // ACF lags matched for the kernel fit
  int moments = 4;   // empirical moments matched for the marginal fit

  void validate() const;  // lags >= 1, moments >= 2
};

// Biased-denominator sample autocorrelations at lags 1..lags.
// Needs length > lags + 1 and nonzero variance.
std::vector<double> empirical_acf(const std::vector<double>& values,
                                  int lags);

struct AcfFit {
  std::vector<double> params;  // kernel parameters in family order
  double objective = 0.0;      // squared ACF residual at the minimizer
};

// Least-squares ACF matching with identity weights: argmin over [lo, hi] of
// sum_k (empirical_acf(k) - acf(k; params))^2, multi-start Nelder-Mead.
AcfFit fit_acf_params(const std::vector<double>& values, KernelFamily family,
                      const GmmConfig& config, const std::vector<double>& lo,
                      const std::vector<double>& hi);

struct MarginalFit {
  Nig3Params params;
  double objective = 0.0;
};

// Moment matching for the NIG marginal: mean and standard deviation are
// matched exactly; with moments >= 3 the tilt is fitted to the standardized
// skewness (and excess kurtosis when moments >= 4) over beta in [-5, 5].
MarginalFit fit_marginal_params(const std::vector<double>& values,
                                const GmmConfig& config);

}  // namespace trawlsbi
