#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trawlsbi/chebyshev.hpp"
#include "trawlsbi/classifier.hpp"
#include "trawlsbi/trawl.hpp"

namespace trawlsbi {

// Unnormalized conditional density exp(head logit - shift) of a 1D block,
// fitted over the block coordinate's box interval; theta supplies the
// conditioning prefix (later coordinates are ignored by the head).
ChebSeries fit_block_conditional(const RatioModel& model, std::size_t head,
                                 const std::vector<double>& summary,
                                 std::vector<double> theta, int degree,
                                 std::uint64_t* head_evals = nullptr);

// Unnormalized joint density surface of a leading 2D block.
ChebSurface fit_first_block_surface(const RatioModel& model,
                                    const std::vector<double>& summary,
                                    int degree,
                                    std::uint64_t* head_evals = nullptr);

struct PosteriorDraws {
  std::vector<std::vector<double>> draws;  // M x dim
  std::vector<double> log_posterior;       // log_ratio + box log density
  std::uint64_t encoder_evals = 0;
  std::uint64_t head_evals = 0;
  // Unnormalized Chebyshev mass of each fitted conditional (first block
  // once, then one entry per draw per later block), kept for monitoring.
  std::vector<double> conditional_masses;

  std::string to_csv() const;
};

// MCMC-free sequential sampling through the telescoping factorization:
// the first block (1D or 2D) is fitted once per series; every later block
// is 1D and refitted per draw conditional on that draw's prefix.
PosteriorDraws sequential_sample(const RatioModel& model,
                                 const TimeSeries& series, std::size_t m,
                                 int degree, Rng& rng);

struct MapResult {
  std::vector<double> theta;
  double log_posterior = 0.0;
  bool projected = false;  // local search hit the box boundary
  bool flat = false;       // objective flat across initial draws
};

// Best posterior draw of m_init refined by Nelder-Mead inside the box;
// never returns a point worse than the best initial draw.
MapResult map_estimate(const RatioModel& model, const TimeSeries& series,
                       std::size_t m_init, Rng& rng);

struct AcfBand {
  std::vector<int> lags;
  std::vector<double> mean, median, lo_quantile, hi_quantile;
};

// Pushes each draw's leading kernel parameters through the theoretical ACF
// and summarizes lag-wise over draws.
AcfBand posterior_acf_band(const PosteriorDraws& draws, KernelFamily family,
                           const std::vector<int>& lags,
                           double quantile = 0.05);

}  // namespace trawlsbi
