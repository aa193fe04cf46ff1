#include "trawlsbi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trawlsbi/posterior.hpp"

namespace trawlsbi {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::size_t included_count(double alpha, std::size_t m) {
  // Draws with strict rank below ceil((1-alpha) M) lie inside the HPD region.
  return static_cast<std::size_t>(std::ceil((1.0 - alpha) * m));
}

// Rank of the true value among draw densities; exact ties against the truth
// are broken uniformly at random so that degenerate (constant-density)
// posteriors still produce uniform ranks.
std::size_t density_rank(const std::vector<double>& draw_dens, double truth,
                         Rng& rng) {
  std::size_t above = 0, ties = 0;
  for (double d : draw_dens) {
    if (d > truth) ++above;
    else if (d == truth) ++ties;
  }
  if (ties > 0)
    above += static_cast<std::size_t>(rng.uniform() * (ties + 1.0));
  return above;
}

}  // namespace

double hpd_threshold(std::vector<double> density_values, double alpha) {
  require(!density_values.empty(), "hpd_threshold: empty input");
  require(alpha > 0.0 && alpha < 1.0, "hpd_threshold: alpha outside (0,1)");
  std::sort(density_values.begin(), density_values.end(),
            std::greater<double>());
  const std::size_t k = included_count(alpha, density_values.size());
  return density_values[k == 0 ? 0 : k - 1];
}

CoverageCurve coverage_from_ranks(const std::vector<std::size_t>& ranks,
                                  std::size_t m_draws,
                                  const std::vector<double>& alpha_grid) {
  require(!ranks.empty(), "coverage_from_ranks: no replicates");
  require(m_draws >= 1, "coverage_from_ranks: no draws");
  CoverageCurve curve;
  curve.alpha = alpha_grid;
  curve.n_replicates = ranks.size();
  curve.m_draws = m_draws;
  curve.coverage.reserve(alpha_grid.size());
  for (double a : alpha_grid) {
    const std::size_t k = included_count(a, m_draws);
    std::size_t in = 0;
    for (std::size_t r : ranks)
      if (r < k) ++in;
    curve.coverage.push_back(static_cast<double>(in) / ranks.size());
  }
  return curve;
}

CoverageCurve coverage_curve(const RatioModel& model,
                             const Simulator& simulator, std::size_t n,
                             std::size_t m,
                             const std::vector<double>& alpha_grid,
                             std::uint64_t seed, int cheb_degree,
                             int threads) {
  require(n >= 1 && m >= 1, "coverage_curve: need n, m >= 1");
  std::vector<std::size_t> ranks(n);
  parallel_for(n, threads, [&](std::size_t j) {
    try {
      Rng rng = Rng::stream(seed, j);
      const std::vector<double> theta = model.box.sample(rng);
      const TimeSeries series = simulator(theta, rng);
      const PosteriorDraws draws =
          sequential_sample(model, series, m, cheb_degree, rng);
      const double truth =
          log_ratio(model, series, theta) + model.box.log_density();
      ranks[j] = density_rank(draws.log_posterior, truth, rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("coverage_curve: replicate " +
                               std::to_string(j) + ": " + e.what());
    }
  });
  return coverage_from_ranks(ranks, m, alpha_grid);
}

CoverageCurve per_block_coverage(const RatioModel& model,
                                 const Simulator& simulator,
                                 std::size_t block_index, std::size_t n,
                                 std::size_t m,
                                 const std::vector<double>& alpha_grid,
                                 std::uint64_t seed, int cheb_degree,
                                 int threads) {
  require(n >= 1 && m >= 1, "per_block_coverage: need n, m >= 1");
  require(block_index < model.heads.size(),
          "per_block_coverage: block index out of range");
  const Block block = model.heads[block_index].block;
  require(block.size <= 2, "per_block_coverage: block wider than 2");
  std::vector<std::size_t> ranks(n);
  parallel_for(n, threads, [&](std::size_t j) {
    try {
      Rng rng = Rng::stream(seed, j);
      const std::vector<double> theta = model.box.sample(rng);
      const TimeSeries series = simulator(theta, rng);
      const std::vector<double> summary = encode(model.encoder, series);
      std::vector<double> dens_vals(m);
      double truth;
      if (block.size == 1) {
        const ChebSeries dens = fit_block_conditional(
            model, block_index, summary, theta, cheb_degree);
        const ChebCdf c = cdf(dens);
        truth = eval(dens, theta[block.start]);
        for (std::size_t d = 0; d < m; ++d)
          dens_vals[d] = eval(dens, invert(c, rng.uniform()));
      } else {
        const ChebSurface surf =
            fit_first_block_surface(model, summary, cheb_degree);
        const ChebCdf marginal = cdf(marginal_x(surf));
        truth = eval2d(surf, theta[0], theta[1]);
        for (std::size_t d = 0; d < m; ++d) {
          const double x = invert(marginal, rng.uniform());
          const double y =
              invert(cdf(conditional_y(surf, x)), rng.uniform());
          dens_vals[d] = eval2d(surf, x, y);
        }
      }
      ranks[j] = density_rank(dens_vals, truth, rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("per_block_coverage: replicate " +
                               std::to_string(j) + ": " + e.what());
    }
  });
  return coverage_from_ranks(ranks, m, alpha_grid);
}

double rank_statistic(const RatioModel& model, const TimeSeries& series,
                      const std::vector<double>& theta,
                      const std::function<double(const std::vector<double>&)>& f,
                      std::size_t m, Rng& rng, int cheb_degree) {
  const PosteriorDraws draws =
      sequential_sample(model, series, m, cheb_degree, rng);
  const double truth = f(theta);
  std::size_t above = 0;
  for (const auto& d : draws.draws)
    if (truth < f(d)) ++above;
  return static_cast<double>(above) / m;
}

double wasserstein_w(const CoverageCurve& curve) {
  require(curve.alpha.size() >= 2 &&
              curve.alpha.size() == curve.coverage.size(),
          "wasserstein_w: need a grid of at least two points");
  double w = 0.0;
  for (std::size_t i = 1; i < curve.alpha.size(); ++i) {
    const double f0 = std::fabs(curve.coverage[i - 1] -
                                (1.0 - curve.alpha[i - 1]));
    const double f1 = std::fabs(curve.coverage[i] - (1.0 - curve.alpha[i]));
    w += 0.5 * (f0 + f1) * (curve.alpha[i] - curve.alpha[i - 1]);
  }
  return w;
}

std::string DiagnosticsReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "alpha,coverage,block\n";
  for (std::size_t i = 0; i < global.alpha.size(); ++i)
    out << global.alpha[i] << ',' << global.coverage[i] << ",global\n";
  for (std::size_t b = 0; b < per_block.size(); ++b)
    for (std::size_t i = 0; i < per_block[b].alpha.size(); ++i)
      out << per_block[b].alpha[i] << ',' << per_block[b].coverage[i] << ','
          << b << '\n';
  out << "metric,value\n";
  out << "w_global," << w_global << '\n';
  for (std::size_t b = 0; b < w_per_block.size(); ++b)
    out << "w_block" << b << ',' << w_per_block[b] << '\n';
  out << "ece," << ece << '\n';
  out << "bce," << holdout_metrics.bce << '\n';
  out << "S," << holdout_metrics.S << '\n';
  out << "B," << holdout_metrics.B << '\n';
  return out.str();
}

}  // namespace trawlsbi
