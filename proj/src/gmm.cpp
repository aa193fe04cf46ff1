#include "trawlsbi/gmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "trawlsbi/optim.hpp"

namespace trawlsbi {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

struct SampleMoments {
  double mean, sd, skew, exkurt;
};

SampleMoments sample_moments(const std::vector<double>& values) {
  const std::size_t n = values.size();
  require(n >= 2, "sample_moments: need at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  require(m2 > 0.0, "sample_moments: zero variance");
  const double sd = std::sqrt(m2);
  return {mean, sd, m3 / (sd * sd * sd), m4 / (m2 * m2) - 3.0};
}

TrawlKernel make_kernel(KernelFamily family, const std::vector<double>& p) {
  return family == KernelFamily::Exponential
             ? TrawlKernel::exponential(p[0])
             : TrawlKernel::inverse_gaussian(p[0], p[1]);
}

// Deterministic interior start points covering the box.
std::vector<std::vector<double>> start_points(const std::vector<double>& lo,
                                              const std::vector<double>& hi) {
  const double fracs[] = {0.2, 0.5, 0.8};
  std::vector<std::vector<double>> starts(1, std::vector<double>{});
  for (std::size_t d = 0; d < lo.size(); ++d) {
    std::vector<std::vector<double>> next;
    for (const auto& s : starts)
      for (double f : fracs) {
        next.push_back(s);
        next.back().push_back(lo[d] + f * (hi[d] - lo[d]));
      }
    starts = std::move(next);
  }
  return starts;
}

}  // namespace

void GmmConfig::validate() const {
  require(lags >= 1, "GmmConfig: lags must be >= 1");
  require(moments >= 2, "GmmConfig: moments must be >= 2");
}

std::vector<double> empirical_acf(const std::vector<double>& values,
                                  int lags) {
  require(lags >= 1, "empirical_acf: lags must be >= 1");
  const std::size_t n = values.size();
  require(n > static_cast<std::size_t>(lags) + 1,
          "empirical_acf: series too short for the requested lags");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double c0 = 0.0;
  for (double v : values) c0 += (v - mean) * (v - mean);
  c0 /= n;
  require(c0 > 0.0, "empirical_acf: zero variance");
  std::vector<double> rho(lags);
  for (int h = 1; h <= lags; ++h) {
    double c = 0.0;
    for (std::size_t i = 0; i + h < n; ++i)
      c += (values[i] - mean) * (values[i + h] - mean);
    rho[h - 1] = c / n / c0;
  }
  return rho;
}

AcfFit fit_acf_params(const std::vector<double>& values, KernelFamily family,
                      const GmmConfig& config, const std::vector<double>& lo,
                      const std::vector<double>& hi) {
  config.validate();
  const std::size_t dim = family == KernelFamily::Exponential ? 1 : 2;
  require(lo.size() == dim && hi.size() == dim,
          "fit_acf_params: bound size does not match the kernel family");
  for (std::size_t d = 0; d < dim; ++d)
    require(lo[d] < hi[d] && lo[d] > 0.0, "fit_acf_params: invalid bounds");
  const std::vector<double> rho = empirical_acf(values, config.lags);

  const auto objective = [&](const std::vector<double>& p) {
    const TrawlKernel k = make_kernel(family, p);
    double s = 0.0;
    for (int h = 1; h <= config.lags; ++h) {
      const double r = rho[h - 1] - acf(k, h);
      s += r * r;
    }
    return s;
  };

  std::vector<double> step(dim);
  for (std::size_t d = 0; d < dim; ++d) step[d] = 0.1 * (hi[d] - lo[d]);
  AcfFit best;
  best.objective = std::numeric_limits<double>::infinity();
  for (const auto& x0 : start_points(lo, hi)) {
    const NelderMeadResult r =
        nelder_mead(objective, x0, step, lo, hi, 500, 1e-12);
    if (r.value < best.objective) {
      best.objective = r.value;
      best.params = r.x;
    }
  }
  if (!std::isfinite(best.objective))
    throw std::runtime_error("fit_acf_params: optimizer failed");
  return best;
}

MarginalFit fit_marginal_params(const std::vector<double>& values,
                                const GmmConfig& config) {
  config.validate();
  const SampleMoments m = sample_moments(values);
  MarginalFit fit;
  fit.params.mu = m.mean;
  fit.params.sigma = m.sd;
  fit.params.beta = 0.0;
  if (config.moments == 2) {
    fit.objective = 0.0;
    return fit;
  }

  // Standardized skewness and excess kurtosis depend on beta alone, so the
  // exact mean/sd match above keeps the full objective separable.
  const bool use_kurt = config.moments >= 4;
  const auto objective = [&](const std::vector<double>& p) {
    const double b = p[0];
    double s = m.skew - nig3_skewness(b);
    double obj = s * s;
    if (use_kurt) {
      const double k = m.exkurt - nig3_excess_kurtosis(b);
      obj += k * k;
    }
    return obj;
  };
  const std::vector<double> lo{-5.0}, hi{5.0};
  double best = std::numeric_limits<double>::infinity();
  for (double b0 : {-4.0, -2.0, 0.0, 2.0, 4.0}) {
    const NelderMeadResult r =
        nelder_mead(objective, {b0}, {0.5}, lo, hi, 500, 1e-14);
    if (r.value < best) {
      best = r.value;
      fit.params.beta = r.x[0];
    }
  }
  fit.objective = best;
  return fit;
}

}  // namespace trawlsbi
