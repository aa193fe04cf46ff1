#include "trawlsbi/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trawlsbi/optim.hpp"

namespace trawlsbi {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Interpolants of exp(logit) can dip slightly negative between knots when
// the logit is only piecewise-smooth (ReLU heads). Lift by the negative
// minimum: a tiny uniform background that keeps the density valid.
void lift_nonnegative(ChebSeries& s) {
  constexpr int n = 4096;
  std::vector<double> vals(n + 1);
  double mn = 0.0, mx = 0.0;
  const auto at = [&](double t) { return eval(s, s.lo + (s.hi - s.lo) * t); };
  for (int i = 0; i <= n; ++i) {
    vals[i] = at(static_cast<double>(i) / n);
    mn = std::min(mn, vals[i]);
    mx = std::max(mx, std::fabs(vals[i]));
  }
  // The true minimum can undercut the sampled one between grid points;
  // golden-section refine every near-negative local minimum of the scan.
  const double trigger = 1e-6 * std::max(1.0, mx);
  constexpr double inv_phi = 0.6180339887498949;
  for (int i = 0; i <= n; ++i) {
    const bool local_min = (i == 0 || vals[i] <= vals[i - 1]) &&
                           (i == n || vals[i] <= vals[i + 1]);
    if (!local_min || vals[i] > trigger) continue;
    double a = static_cast<double>(std::max(0, i - 1)) / n;
    double b = static_cast<double>(std::min(n, i + 1)) / n;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = at(c), fd = at(d);
    for (int it = 0; it < 60; ++it) {
      if (fc < fd) {
        b = d; d = c; fd = fc;
        c = b - inv_phi * (b - a); fc = at(c);
      } else {
        a = c; c = d; fc = fd;
        d = a + inv_phi * (b - a); fd = at(d);
      }
    }
    mn = std::min({mn, fc, fd});
  }
  if (mn <= 0.0) s.coeffs[0] += -mn + 1e-7 * std::max(1.0, mx);
}

void lift_nonnegative(ChebSurface& s) {
  double mn = 0.0, mx = 0.0;
  for (int i = 0; i <= 96; ++i)
    for (int j = 0; j <= 96; ++j) {
      const double x = s.lo_x + (s.hi_x - s.lo_x) * i / 96.0;
      const double y = s.lo_y + (s.hi_y - s.lo_y) * j / 96.0;
      const double v = eval2d(s, x, y);
      mn = std::min(mn, v);
      mx = std::max(mx, std::fabs(v));
    }
  if (mn <= 0.0) s.coeffs[0] += -1.25 * mn + 1e-6 * std::max(1.0, mx);
}

}  // namespace

ChebSeries fit_block_conditional(const RatioModel& model, std::size_t head,
                                 const std::vector<double>& summary,
                                 std::vector<double> theta, int degree,
                                 std::uint64_t* head_evals) {
  const int coord = model.heads[head].block.start;
  require(model.heads[head].block.size == 1,
          "fit_block_conditional: block must be 1D");
  const double lo = model.box.lo[coord], hi = model.box.hi[coord];
  for (int c = coord; c < model.box.dim(); ++c) theta[c] = model.box.lo[c];
  const std::vector<double> knots = cheb_knots(lo, hi, degree);
  std::vector<double> logits(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    theta[coord] = knots[k];
    logits[k] = head_log_ratio(model, head, summary, theta);
    if (head_evals) ++*head_evals;
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> vals(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k)
    vals[k] = std::exp(logits[k] - shift);
  ChebSeries series = fit_from_knot_values(vals, lo, hi);
  lift_nonnegative(series);
  return series;
}

ChebSurface fit_first_block_surface(const RatioModel& model,
                                    const std::vector<double>& summary,
                                    int degree, std::uint64_t* head_evals) {
  require(model.heads[0].block.start == 0 && model.heads[0].block.size == 2,
          "fit_first_block_surface: first block must be 2D");
  const int dim = model.box.dim();
  const std::vector<double> xs =
      cheb_knots(model.box.lo[0], model.box.hi[0], degree);
  const std::vector<double> ys =
      cheb_knots(model.box.lo[1], model.box.hi[1], degree);
  std::vector<double> logits(xs.size() * ys.size());
  std::vector<double> theta(dim, 0.0);
  for (int c = 2; c < dim; ++c) theta[c] = model.box.lo[c];
  double shift = -1e300;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      theta[0] = xs[i];
      theta[1] = ys[j];
      const double l = head_log_ratio(model, 0, summary, theta);
      logits[i * ys.size() + j] = l;
      shift = std::max(shift, l);
      if (head_evals) ++*head_evals;
    }
  std::size_t idx = 0;
  // fit2d probes the same knots in the same row-major order.
  ChebSurface surf = fit2d(
      [&](double, double) { return std::exp(logits[idx++] - shift); },
      model.box.lo[0], model.box.hi[0], model.box.lo[1], model.box.hi[1],
      degree, degree);
  lift_nonnegative(surf);
  return surf;
}

std::string PosteriorDraws::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  const std::size_t dim = draws.empty() ? 0 : draws[0].size();
  for (std::size_t c = 0; c < dim; ++c) out << "theta" << c << ',';
  out << "log_posterior\n";
  for (std::size_t j = 0; j < draws.size(); ++j) {
    for (double v : draws[j]) out << v << ',';
    out << log_posterior[j] << '\n';
  }
  return out.str();
}

PosteriorDraws sequential_sample(const RatioModel& model,
                                 const TimeSeries& series, std::size_t m,
                                 int degree, Rng& rng) {
  model.validate();
  require(m >= 1, "sequential_sample: need at least one draw");
  require(degree >= 2, "sequential_sample: degree too small");
  for (std::size_t i = 1; i < model.heads.size(); ++i)
    require(model.heads[i].block.size == 1,
            "sequential_sample: only the first block may be 2D");
  require(model.heads[0].block.size <= 2,
          "sequential_sample: first block must be 1D or 2D");

  PosteriorDraws out;
  out.encoder_evals = 1;
  const std::vector<double> summary = encode(model.encoder, series);
  const int dim = model.box.dim();
  out.draws.assign(m, std::vector<double>(dim, 0.0));

  if (model.heads[0].block.size == 2) {
    // One surface per series, reused for all draws.
    ChebSurface surf;
    try {
      surf = fit_first_block_surface(model, summary, degree, &out.head_evals);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("sequential_sample: block 0: ") +
                               e.what());
    }
    const ChebCdf marginal = cdf(marginal_x(surf));
    out.conditional_masses.push_back(marginal.total_mass);
    for (std::size_t j = 0; j < m; ++j) {
      const double x = invert(marginal, rng.uniform());
      const ChebCdf cond = cdf(conditional_y(surf, x));
      out.draws[j][0] = x;
      out.draws[j][1] = invert(cond, rng.uniform());
    }
  } else {
    ChebSeries dens;
    try {
      dens = fit_block_conditional(model, 0, summary,
                                   std::vector<double>(dim, 0.0), degree,
                                   &out.head_evals);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("sequential_sample: block 0: ") +
                               e.what());
    }
    const ChebCdf c0 = cdf(dens);
    out.conditional_masses.push_back(c0.total_mass);
    for (std::size_t j = 0; j < m; ++j)
      out.draws[j][0] = invert(c0, rng.uniform());
  }

  // Later blocks: one Chebyshev fit per draw, conditioning on the prefix.
  for (std::size_t i = 1; i < model.heads.size(); ++i) {
    const int coord = model.heads[i].block.start;
    for (std::size_t j = 0; j < m; ++j) {
      ChebSeries dens;
      try {
        dens = fit_block_conditional(model, i, summary, out.draws[j], degree,
                                     &out.head_evals);
      } catch (const std::exception& e) {
        throw std::runtime_error("sequential_sample: block " +
                                 std::to_string(i) + ", draw " +
                                 std::to_string(j) + ": " + e.what());
      }
      const ChebCdf c = cdf(dens);
      out.conditional_masses.push_back(c.total_mass);
      out.draws[j][coord] = invert(c, rng.uniform());
    }
  }

  out.log_posterior.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.log_posterior[j] =
        log_ratio_from_summary(model, summary, out.draws[j]) +
        model.box.log_density();
    out.head_evals += model.heads.size();
  }
  return out;
}

MapResult map_estimate(const RatioModel& model, const TimeSeries& series,
                       std::size_t m_init, Rng& rng) {
  require(m_init >= 1, "map_estimate: need at least one initial draw");
  const PosteriorDraws draws =
      sequential_sample(model, series, m_init, 63, rng);
  std::size_t best = 0;
  double lo_val = draws.log_posterior[0], hi_val = draws.log_posterior[0];
  for (std::size_t j = 1; j < draws.draws.size(); ++j) {
    lo_val = std::min(lo_val, draws.log_posterior[j]);
    hi_val = std::max(hi_val, draws.log_posterior[j]);
    if (draws.log_posterior[j] > draws.log_posterior[best]) best = j;
  }

  MapResult r;
  r.flat = (hi_val - lo_val) < 1e-9 * (1.0 + std::fabs(hi_val));
  const std::vector<double> summary = encode(model.encoder, series);
  std::vector<double> step(model.box.dim());
  for (int i = 0; i < model.box.dim(); ++i)
    step[i] = 0.05 * (model.box.hi[i] - model.box.lo[i]);
  const NelderMeadResult nm = nelder_mead(
      [&](const std::vector<double>& t) {
        return -log_ratio_from_summary(model, summary, t);
      },
      draws.draws[best], step, model.box.lo, model.box.hi, 400, 1e-12);
  r.projected = nm.projected;
  const double refined = -nm.value + model.box.log_density();
  if (refined >= draws.log_posterior[best]) {
    r.theta = nm.x;
    r.log_posterior = refined;
  } else {
    r.theta = draws.draws[best];
    r.log_posterior = draws.log_posterior[best];
  }
  return r;
}

AcfBand posterior_acf_band(const PosteriorDraws& draws, KernelFamily family,
                           const std::vector<int>& lags, double quantile) {
  require(!draws.draws.empty(), "posterior_acf_band: no draws");
  require(quantile > 0.0 && quantile < 0.5, "posterior_acf_band: quantile");
  AcfBand band;
  band.lags = lags;
  const std::size_t m = draws.draws.size();
  std::vector<double> vals(m);
  for (int h : lags) {
    for (std::size_t j = 0; j < m; ++j) {
      TrawlKernel k =
          family == KernelFamily::Exponential
              ? TrawlKernel::exponential(draws.draws[j][0])
              : TrawlKernel::inverse_gaussian(draws.draws[j][0],
                                              draws.draws[j][1]);
      vals[j] = acf(k, h);
    }
    std::sort(vals.begin(), vals.end());
    double mean = 0.0;
    for (double v : vals) mean += v;
    band.mean.push_back(mean / m);
    band.median.push_back(m % 2 == 1
                              ? vals[m / 2]
                              : 0.5 * (vals[m / 2 - 1] + vals[m / 2]));
    const std::size_t qi = static_cast<std::size_t>(quantile * (m - 1));
    band.lo_quantile.push_back(vals[qi]);
    band.hi_quantile.push_back(vals[m - 1 - qi]);
  }
  return band;
}

}  // namespace trawlsbi
