#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "trawlsbi/trawl.hpp"

using namespace trawlsbi;

namespace {

// Adaptive-free quadrature of the trawl function over (-inf, 0] by
// Simpson on [-L, 0] with L chosen from the exponential tail bound.
double quad_leb(const TrawlKernel& k) {
  double L = 1.0;
  while (trawl_function(k, -L) > 1e-14) L *= 2.0;
  const int n = 200000;
  const double h = L / n;
  double acc = trawl_function(k, -L) + trawl_function(k, 0.0);
  for (int i = 1; i < n; ++i)
    acc += trawl_function(k, -L + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

std::vector<double> sample_acf(const std::vector<double>& x, int max_lag) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  std::vector<double> rho(max_lag);
  for (int h = 1; h <= max_lag; ++h) {
    double c = 0.0;
    for (std::size_t i = 0; i + h < n; ++i)
      c += (x[i] - mean) * (x[i + h] - mean);
    rho[h - 1] = c / c0;
  }
  return rho;
}

SeedSpec gaussian_seed(double mu, double s2) {
  SeedSpec s;
  s.family = SeedFamily::Gaussian;
  s.params = {mu, s2};
  return s;
}

}  // namespace

TEST_CASE("acf closed forms") {
  const TrawlKernel e = TrawlKernel::exponential(1.0);
  CHECK(acf(e, 0.0) == doctest::Approx(1.0));
  CHECK(acf(e, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  const TrawlKernel ig = TrawlKernel::inverse_gaussian(13.36, 15.52);
  CHECK(acf(ig, 0.0) == doctest::Approx(1.0));
  CHECK(acf(ig, 1.0) == doctest::Approx(0.9169).epsilon(1e-3));
  // Strictly decreasing.
  double prev = 1.0;
  for (double h = 0.5; h < 30.0; h += 0.5) {
    const double r = acf(ig, h);
    CHECK(r < prev);
    prev = r;
  }
  CHECK_THROWS(acf(e, -0.5));
}

TEST_CASE("leb_area closed forms vs quadrature") {
  CHECK(leb_area(TrawlKernel::exponential(2.0)) == doctest::Approx(0.5));
  CHECK(leb_area(TrawlKernel::inverse_gaussian(2.0, 4.0)) ==
        doctest::Approx(1.0));
  CHECK(leb_area(TrawlKernel::inverse_gaussian(13.36, 15.52)) ==
        doctest::Approx(11.501).epsilon(1e-3));
  for (const TrawlKernel& k :
       {TrawlKernel::exponential(0.7), TrawlKernel::inverse_gaussian(3.0, 2.0),
        TrawlKernel::inverse_gaussian(13.36, 15.52)}) {
    CHECK(leb_area(k) == doctest::Approx(quad_leb(k)).epsilon(1e-8));
  }
}

TEST_CASE("slice areas: closed form, telescoping, error paths") {
  TrawlModel model(TrawlKernel::exponential(1.0), gaussian_seed(0.0, 1.0), 1.0,
                   1e-6);
  const std::vector<double> d = slice_areas(model);
  const double f = (1.0 - std::exp(-1.0)) * (1.0 - std::exp(-1.0));
  for (std::size_t j = 0; j + 1 < d.size(); ++j)
    CHECK(d[j] == doctest::Approx(std::exp(-double(j)) * f).epsilon(1e-10));

  double weighted = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) weighted += (j + 1.0) * d[j];
  CHECK(weighted == doctest::Approx(leb_area(model.kernel)).epsilon(1e-10));
  for (double v : d) CHECK(v >= 0.0);

  // Near-constant acf: truncation lag guard trips.
  TrawlModel degenerate(TrawlKernel::exponential(1e-12),
                        gaussian_seed(0.0, 1.0), 1.0, 1e-4);
  CHECK_THROWS(slice_areas(degenerate));
}

TEST_CASE("simulation reproduces marginal moments and ACF") {
  struct Config {
    TrawlKernel kernel;
    SeedSpec seed;
  };
  SeedSpec gamma_seed;
  gamma_seed.family = SeedFamily::Gamma;
  gamma_seed.params = {2.0, 1.5};
  SeedSpec pois_seed;
  pois_seed.family = SeedFamily::Poisson;
  pois_seed.params = {1.3};
  const Config configs[] = {
      {TrawlKernel::exponential(0.5), gaussian_seed(0.3, 1.2)},
      {TrawlKernel::inverse_gaussian(15.0, 15.0), gamma_seed},
      {TrawlKernel::exponential(1.0), pois_seed},
  };
  const std::size_t k = 100000;
  int cfg_id = 0;
  for (const Config& c : configs) {
    TrawlModel model(c.kernel, c.seed, 1.0, 1e-4);
    Rng rng = Rng::stream(77, cfg_id++);
    const TimeSeries x = simulate(model, k, rng);
    REQUIRE(x.values.size() == k);

    const Moments m = seed_moments(scale_by_area(c.seed, leb_area(c.kernel)));
    double s = 0.0, s2 = 0.0;
    for (double v : x.values) {
      s += v;
      s2 += v * v;
    }
    const double mean = s / k, var = s2 / k - mean * mean;
    // Positive autocorrelation inflates the variance of the sample mean.
    double rho_sum = 0.0;
    for (int h = 1; h < 200; ++h) rho_sum += acf(c.kernel, h);
    const double se_mean =
        std::sqrt(m.variance * (1.0 + 2.0 * rho_sum) / k);
    CHECK(std::fabs(mean - m.mean) < 4.0 * se_mean);
    CHECK(var == doctest::Approx(m.variance).epsilon(0.05));

    const std::vector<double> rho = sample_acf(x.values, 10);
    for (int h = 1; h <= 10; ++h) {
      const double se = std::sqrt((1.0 + 2.0 * rho_sum) / k);
      CHECK(std::fabs(rho[h - 1] - acf(c.kernel, h)) < 3.0 * se);
    }
  }
}

TEST_CASE("NIG3 marginal routing yields standardized marginal") {
  const TrawlKernel k = TrawlKernel::inverse_gaussian(15.0, 15.0);
  TrawlModel model(k, Nig3Params{0.0, 1.0, 0.0}, 1.0, 1e-4);
  Rng rng(5150);
  const TimeSeries x = simulate(model, 100000, rng);
  double s = 0.0, s2 = 0.0;
  for (double v : x.values) {
    s += v;
    s2 += v * v;
  }
  const double mean = s / x.values.size();
  const double sd = std::sqrt(s2 / x.values.size() - mean * mean);
  double rho_sum = 0.0;
  for (int h = 1; h < 400; ++h) rho_sum += acf(k, h);
  const double se_mean = std::sqrt((1.0 + 2.0 * rho_sum) / 100000.0);
  CHECK(std::fabs(mean) < 4.0 * se_mean);
  CHECK(sd == doctest::Approx(1.0).epsilon(0.05));

  const std::vector<double> rho = sample_acf(x.values, 3);
  const double se = std::sqrt((1.0 + 2.0 * rho_sum) / 100000.0);
  CHECK(std::fabs(rho[0] - acf(k, 1)) < 3.0 * se);
}

TEST_CASE("simulation determinism") {
  TrawlModel model(TrawlKernel::exponential(0.8), gaussian_seed(0.0, 1.0));
  Rng r1(99), r2(99);
  const TimeSeries a = simulate(model, 500, r1);
  const TimeSeries b = simulate(model, 500, r2);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("truncation bias shrinks with eps") {
  const TrawlKernel k = TrawlKernel::inverse_gaussian(12.0, 10.0);
  // Deterministic proxy: the covariance implied by the truncated cell
  // structure at a fixed lag, versus the exact c_h = leb_A * acf(h).
  const int h =
      TrawlModel(k, gaussian_seed(0.0, 1.0), 1.0, 1e-2).truncation_lag() / 2;
  double prev_bias = 1e9;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    TrawlModel model(k, gaussian_seed(0.0, 1.0), 1.0, eps);
    const std::vector<double> d = slice_areas(model);
    const int T = static_cast<int>(d.size()) - 1;
    double cov = 0.0;
    for (int j = h; j <= T; ++j) cov += (j + 1.0 - h) * d[j];
    const double bias =
        std::fabs(cov - leb_area(k) * acf(k, h)) / leb_area(k);
    CHECK(bias <= prev_bias + 1e-15);
    prev_bias = bias;
  }
}

TEST_CASE("standardize") {
  TimeSeries s;
  s.values = {1.0, 1.0, 1.0};
  CHECK_THROWS(standardize(s));

  s.values = {0.0, 2.0};
  const StandardizedSeries z = standardize(s);
  CHECK(z.mean == doctest::Approx(1.0));
  CHECK(z.sd == doctest::Approx(std::sqrt(2.0)));  // sample sd
  CHECK(z.series.values[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));

  s.values = {0.3, -1.2, 2.7, 0.4, 0.0};
  const StandardizedSeries w = standardize(s);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    CHECK(w.series.values[i] * w.sd + w.mean ==
          doctest::Approx(s.values[i]).epsilon(1e-12));
}
