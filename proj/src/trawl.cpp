#include "trawlsbi/trawl.hpp"

#include <cmath>
#include <stdexcept>

namespace trawlsbi {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

TrawlKernel TrawlKernel::exponential(double lambda) {
  TrawlKernel k;
  k.family = KernelFamily::Exponential;
  k.lambda = lambda;
  k.validate();
  return k;
}

TrawlKernel TrawlKernel::inverse_gaussian(double gamma_acf, double eta_acf) {
  TrawlKernel k;
  k.family = KernelFamily::InverseGaussian;
  k.gamma_acf = gamma_acf;
  k.eta_acf = eta_acf;
  k.validate();
  return k;
}

void TrawlKernel::validate() const {
  if (family == KernelFamily::Exponential) {
    require(lambda > 0.0, "TrawlKernel: lambda must be positive");
  } else {
    require(gamma_acf > 0.0 && eta_acf > 0.0,
            "TrawlKernel: gamma_acf, eta_acf must be positive");
  }
}

double acf(const TrawlKernel& kernel, double h) {
  kernel.validate();
  require(h >= 0.0, "acf: lag must be nonnegative");
  if (kernel.family == KernelFamily::Exponential)
    return std::exp(-kernel.lambda * h);
  const double g2 = kernel.gamma_acf * kernel.gamma_acf;
  return std::exp(kernel.eta_acf * (1.0 - std::sqrt(1.0 + 2.0 * h / g2)));
}

double leb_area(const TrawlKernel& kernel) {
  kernel.validate();
  if (kernel.family == KernelFamily::Exponential) return 1.0 / kernel.lambda;
  return kernel.gamma_acf * kernel.gamma_acf / kernel.eta_acf;
}

double trawl_function(const TrawlKernel& kernel, double s) {
  kernel.validate();
  require(s <= 0.0, "trawl_function: s must be nonpositive");
  if (kernel.family == KernelFamily::Exponential)
    return std::exp(kernel.lambda * s);
  const double g2 = kernel.gamma_acf * kernel.gamma_acf;
  const double root = std::sqrt(1.0 - 2.0 * s / g2);
  return std::exp(kernel.eta_acf * (1.0 - root)) / root;
}

TrawlModel::TrawlModel(TrawlKernel k, SeedSpec s, double dt_, double eps)
    : kernel(k), seed(std::move(s)), dt(dt_), truncation_eps(eps) {
  kernel.validate();
  seed.validate();
  require(dt > 0.0, "TrawlModel: dt must be positive");
  require(eps > 0.0 && eps < 1.0, "TrawlModel: truncation_eps in (0, 1)");
}

TrawlModel::TrawlModel(TrawlKernel k, const Nig3Params& marginal, double dt_,
                       double eps)
    : TrawlModel(k,
                 scale_by_area(nig3_to_nig4(marginal), 1.0 / leb_area(k)),
                 dt_, eps) {}

int TrawlModel::truncation_lag() const {
  int j = 0;
  while (acf(kernel, j * dt) >= truncation_eps) {
    ++j;
    if (j > 100'000'000)
      throw std::runtime_error("TrawlModel: truncation lag not finite");
  }
  return j;
}

std::vector<double> slice_areas(const TrawlModel& model) {
  const int T = model.truncation_lag();
  const double c0 = leb_area(model.kernel);
  auto c = [&](int j) { return c0 * acf(model.kernel, j * model.dt); };
  std::vector<double> d(T + 1);
  double weighted = 0.0;
  for (int j = 0; j < T; ++j) {
    d[j] = c(j) - 2.0 * c(j + 1) + c(j + 2);
    if (d[j] < -1e-12)
      throw std::invalid_argument("slice_areas: non-monotone kernel");
    if (d[j] < 0.0) d[j] = 0.0;
    weighted += (j + 1.0) * d[j];
  }
  // Tail cell absorbs the remainder: sum (j+1) d_j = c_0 exactly.
  d[T] = (c0 - weighted) / (T + 1.0);
  if (d[T] < -1e-12)
    throw std::invalid_argument("slice_areas: negative tail cell");
  if (d[T] < 0.0) d[T] = 0.0;
  return d;
}

TimeSeries simulate(const TrawlModel& model, std::size_t k, Rng& rng) {
  require(k >= 2, "simulate: k must be at least 2");
  const std::vector<double> d = slice_areas(model);
  const std::size_t T = d.size() - 1;
  if ((k + T) * (T + 1) > model.max_cells)
    throw std::runtime_error("simulate: cell budget exceeded");

  TimeSeries out;
  out.dt = model.dt;
  out.values.assign(k, 0.0);
  // Cell Z_{m,j} contributes to observations m..m+j; process one lag row at
  // a time with a sliding window sum.
  std::vector<double> row;
  for (std::size_t j = 0; j <= T; ++j) {
    if (d[j] <= 0.0) continue;
    const std::size_t n = k + j;  // cells with origins i-j .. i for i < k
    row.resize(n);
    for (std::size_t m = 0; m < n; ++m)
      row[m] = sample(model.seed, d[j], rng);
    double window = 0.0;
    for (std::size_t m = 0; m <= j; ++m) window += row[m];
    out.values[0] += window;
    for (std::size_t i = 1; i < k; ++i) {
      window += row[i + j] - row[i - 1];
      out.values[i] += window;
    }
  }
  return out;
}

StandardizedSeries standardize(const TimeSeries& series) {
  const std::size_t n = series.values.size();
  require(n >= 2, "standardize: need at least two observations");
  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : series.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 0.0)
    throw std::invalid_argument("standardize: series has zero variance");
  StandardizedSeries out;
  out.mean = mean;
  out.sd = sd;
  out.series.dt = series.dt;
  out.series.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.series.values[i] = (series.values[i] - mean) / sd;
  return out;
}

}  // namespace trawlsbi
