#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "trawlsbi/calibration.hpp"
#include "trawlsbi/classifier.hpp"
#include "trawlsbi/training.hpp"

namespace trawlsbi {

struct CoverageCurve {
  std::vector<double> alpha;     // includes 0 and 1
  std::vector<double> coverage;  // estimated C_{1-alpha}, monotone in alpha
  std::size_t n_replicates = 0;
  std::size_t m_draws = 0;
};

// Highest-posterior-density threshold: sort descending, take the value at
// rank ceil((1-alpha) M); equal values stay inside the region.
double hpd_threshold(std::vector<double> density_values, double alpha);

// Single-pass construction from strict ranks; exactly monotone in alpha.
CoverageCurve coverage_from_ranks(const std::vector<std::size_t>& ranks,
                                  std::size_t m_draws,
                                  const std::vector<double>& alpha_grid);

// Global coverage: N fresh (series, theta) replicates, M posterior draws
// each, inclusion decided by posterior-density rank of the true theta.
CoverageCurve coverage_curve(const RatioModel& model,
                             const Simulator& simulator, std::size_t n,
                             std::size_t m,
                             const std::vector<double>& alpha_grid,
                             std::uint64_t seed, int cheb_degree = 63,
                             int threads = 0);

// Coverage of block i's conditional posterior given the TRUE prefix.
CoverageCurve per_block_coverage(const RatioModel& model,
                                 const Simulator& simulator,
                                 std::size_t block_index, std::size_t n,
                                 std::size_t m,
                                 const std::vector<double>& alpha_grid,
                                 std::uint64_t seed, int cheb_degree = 63,
                                 int threads = 0);

// Fraction of M posterior samples with f(sample) strictly above f(theta).
double rank_statistic(const RatioModel& model, const TimeSeries& series,
                      const std::vector<double>& theta,
                      const std::function<double(const std::vector<double>&)>& f,
                      std::size_t m, Rng& rng, int cheb_degree = 63);

// Trapezoidal integral of |C_alpha - alpha| over [0, 1].
double wasserstein_w(const CoverageCurve& curve);

struct DiagnosticsReport {
  CoverageCurve global;
  std::vector<CoverageCurve> per_block;
  double w_global = 0.0;
  std::vector<double> w_per_block;
  Metrics holdout_metrics;
  double ece = 0.0;

  // Plot-ready rows (alpha, coverage, block) plus one summary row.
  std::string to_csv() const;
};

}  // namespace trawlsbi
