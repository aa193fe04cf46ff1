#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "trawlsbi/diagnostics.hpp"
#include "trawlsbi/posterior.hpp"

using namespace trawlsbi;

namespace {

SamplingBox unit_box(int dim) {
  SamplingBox box;
  box.lo.assign(dim, 0.0);
  box.hi.assign(dim, 1.0);
  for (int i = 0; i < dim; ++i) box.blocks.push_back({i, 1});
  return box;
}

EncoderSpec tiny_summary() {
  EncoderSpec enc;
  enc.lags = 2;
  enc.moments = 2;
  return enc;
}

void zero_model(RatioModel& model) {
  for (BlockHead& h : model.heads)
    for (nn::Param* p : h.mlp.params())
      std::fill(p->value.begin(), p->value.end(), 0.0);
}

// Head `which` computes logit = -slope * |series mean - theta[which]| via two
// ReLU units; all other heads are zeroed. The implied conditional density is
// Laplace(series mean, 1/slope) truncated to the box.
RatioModel laplace_model(const SamplingBox& box, std::size_t which,
                         double slope, Rng& rng) {
  RatioModel model = make_ratio_model(tiny_summary(), box, {2}, 0.0, rng);
  zero_model(model);
  nn::Mlp& mlp = model.heads[which].mlp;
  const int in = mlp.sizes[0];
  const int mean_idx = 2;                       // summary = (acf1, acf2, mean, sd)
  const int theta_idx = 4 + static_cast<int>(which);
  REQUIRE(theta_idx == in - 1);
  mlp.layers[0].w.value[0 * in + mean_idx] = slope;
  mlp.layers[0].w.value[0 * in + theta_idx] = -slope;
  mlp.layers[0].w.value[1 * in + mean_idx] = -slope;
  mlp.layers[0].w.value[1 * in + theta_idx] = slope;
  mlp.layers[1].w.value[0] = -1.0;
  mlp.layers[1].w.value[1] = -1.0;
  return model;
}

double laplace_draw(double scale, Rng& rng) {
  const double u = rng.uniform() - 0.5;
  return -scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::fabs(u));
}

// Constant series carrying theta[which] + Laplace(0, scale) as its mean.
Simulator laplace_simulator(std::size_t which, double scale) {
  return [which, scale](const std::vector<double>& theta, Rng& rng) {
    TimeSeries s;
    s.values.assign(5, theta[which] + laplace_draw(scale, rng));
    return s;
  };
}

Simulator noise_simulator() {
  return [](const std::vector<double>&, Rng& rng) {
    TimeSeries s;
    for (int i = 0; i < 5; ++i) s.values.push_back(rng.normal());
    return s;
  };
}

std::vector<double> grid11() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

double coverage_at(const CoverageCurve& c, double alpha) {
  for (std::size_t i = 0; i < c.alpha.size(); ++i)
    if (std::fabs(c.alpha[i] - alpha) < 1e-12) return c.coverage[i];
  REQUIRE(false);
  return 0.0;
}

void check_diagonal(const CoverageCurve& c, double slack) {
  const double n = static_cast<double>(c.n_replicates);
  for (std::size_t i = 0; i < c.alpha.size(); ++i) {
    const double a = c.alpha[i];
    const double se = std::sqrt(std::max(a * (1.0 - a), 0.25 / n) / n);
    CHECK(std::fabs(c.coverage[i] - (1.0 - a)) < 3.0 * se + slack);
  }
}

}  // namespace

TEST_CASE("highest-density threshold: rank and tie conventions") {
  CHECK(hpd_threshold({0.1, 0.4, 0.3, 0.2}, 0.5) == 0.3);
  CHECK(hpd_threshold({0.1, 0.4, 0.3, 0.2}, 1e-9) == 0.1);  // full region
  CHECK(hpd_threshold({0.7, 0.7, 0.7}, 0.25) == 0.7);
  CHECK(hpd_threshold({0.7, 0.7, 0.7}, 0.9) == 0.7);
  CHECK(hpd_threshold({0.5, 0.1, 0.9}, 0.7) == 0.9);  // top 1 of 3
  CHECK_THROWS_AS(hpd_threshold({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(hpd_threshold({0.5}, 0.0), std::invalid_argument);
}

TEST_CASE("curves built from ranks are exactly monotone") {
  Rng rng(1);
  std::vector<std::size_t> ranks;
  for (int i = 0; i < 500; ++i)
    ranks.push_back(static_cast<std::size_t>(rng.uniform() * 101.0));
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const CoverageCurve c = coverage_from_ranks(ranks, 100, grid);
  REQUIRE(c.coverage.size() == grid.size());
  for (std::size_t i = 1; i < c.coverage.size(); ++i)
    CHECK(c.coverage[i] <= c.coverage[i - 1]);
  CHECK(c.coverage.front() >= c.coverage.back());
  CHECK(c.coverage.back() == 0.0);  // alpha = 1 region is empty

  // Hand-computed case: ranks {0,1,2,3} of m=4 at alpha = 0.5 -> top 2 in.
  const CoverageCurve tiny = coverage_from_ranks({0, 1, 2, 3}, 4, {0.5});
  CHECK(tiny.coverage[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("coverage summary W: closed forms and grid stability") {
  CoverageCurve c;
  for (int i = 0; i <= 100; ++i) {
    c.alpha.push_back(i / 100.0);
    c.coverage.push_back(1.0 - i / 100.0);  // perfect diagonal
  }
  CHECK(wasserstein_w(c) == doctest::Approx(0.0).epsilon(1e-12));

  for (std::size_t i = 0; i < c.coverage.size(); ++i) c.coverage[i] = 1.0;
  CHECK(wasserstein_w(c) == doctest::Approx(0.5).epsilon(1e-12));

  for (std::size_t i = 0; i < c.coverage.size(); ++i) {
    const double u = 1.0 - c.alpha[i];
    c.coverage[i] = u * u;  // integral of (u - u^2) du = 1/6
  }
  const double w101 = wasserstein_w(c);
  CHECK(w101 == doctest::Approx(1.0 / 6.0).epsilon(1e-3));

  CoverageCurve fine;
  for (int i = 0; i <= 1000; ++i) {
    const double a = i / 1000.0;
    fine.alpha.push_back(a);
    fine.coverage.push_back((1.0 - a) * (1.0 - a));
  }
  CHECK(std::fabs(wasserstein_w(fine) - w101) < 1e-3);
}

TEST_CASE("rank statistic tie and extreme conventions") {
  SamplingBox box = unit_box(1);
  Rng rng(3);
  RatioModel model = make_ratio_model(tiny_summary(), box, {4}, 0.0, rng);
  zero_model(model);
  TimeSeries series;
  series.values = {0.2, -0.1, 0.4, 0.0, 0.3};
  const std::vector<double> theta{0.5};

  Rng r1(5);
  CHECK(rank_statistic(model, series, theta,
                       [](const std::vector<double>&) { return 1.0; }, 40,
                       r1, 31) == 0.0);
  Rng r2(7);
  CHECK(rank_statistic(
            model, series, theta,
            [&](const std::vector<double>& t) {
              return t == theta ? -1.0 : 0.0;
            },
            40, r2, 31) == 1.0);
}

TEST_CASE("identity-ratio model: global and per-block curves are diagonal") {
  SamplingBox box = unit_box(2);
  Rng rng(9);
  RatioModel model = make_ratio_model(tiny_summary(), box, {4}, 0.0, rng);
  zero_model(model);
  const Simulator sim = noise_simulator();

  const CoverageCurve global =
      coverage_curve(model, sim, 400, 100, grid11(), 42, 31, 4);
  check_diagonal(global, 0.02);
  CHECK(wasserstein_w(global) < 0.05);

  for (std::size_t b = 0; b < 2; ++b) {
    const CoverageCurve pb =
        per_block_coverage(model, sim, b, 400, 100, grid11(), 43 + b, 31, 4);
    check_diagonal(pb, 0.02);
  }
}

TEST_CASE("exactly calibrated Laplace model stays on the diagonal") {
  SamplingBox box = unit_box(1);
  Rng rng(11);
  const double slope = 10.0;
  const RatioModel model = laplace_model(box, 0, slope, rng);
  const Simulator sim = laplace_simulator(0, 1.0 / slope);

  const CoverageCurve global =
      coverage_curve(model, sim, 300, 150, grid11(), 99, 63, 4);
  check_diagonal(global, 0.04);
  CHECK(wasserstein_w(global) < 0.06);

  // Single-draw regions are Bernoulli; the mean still matches at alpha=1/2.
  const CoverageCurve single =
      coverage_curve(model, sim, 400, 1, {0.5}, 101, 63, 4);
  CHECK(std::fabs(single.coverage[0] - 0.5) < 3.0 * std::sqrt(0.25 / 400.0));
}

TEST_CASE("overconfident logits push coverage below the diagonal") {
  SamplingBox box = unit_box(1);
  Rng rng(13);
  const double true_scale = 0.1;
  // Model slope 3x the data-generating precision: logits scaled by 3.
  const RatioModel model = laplace_model(box, 0, 3.0 / true_scale, rng);
  const Simulator sim = laplace_simulator(0, true_scale);

  const CoverageCurve c =
      coverage_curve(model, sim, 300, 150, grid11(), 7, 63, 4);
  const double se = std::sqrt(0.25 / 300.0);
  CHECK(coverage_at(c, 0.5) < 0.5 - 3.0 * se);
  CHECK(wasserstein_w(c) > 0.1);
}

TEST_CASE("per-block curves localize a block-specific miscalibration") {
  SamplingBox box = unit_box(2);
  Rng rng(15);
  const double true_scale = 0.1;
  // Head 0 is non-informative (exactly calibrated: the conditional is the
  // box marginal); head 1 is 3x overconfident about theta[1].
  const RatioModel model = laplace_model(box, 1, 3.0 / true_scale, rng);
  const Simulator sim = laplace_simulator(1, true_scale);

  const CoverageCurve ok =
      per_block_coverage(model, sim, 0, 300, 120, grid11(), 21, 63, 4);
  check_diagonal(ok, 0.03);

  const CoverageCurve bad =
      per_block_coverage(model, sim, 1, 300, 120, grid11(), 23, 63, 4);
  const double se = std::sqrt(0.25 / 300.0);
  CHECK(coverage_at(bad, 0.5) < 0.5 - 3.0 * se);
}

TEST_CASE("posterior-density ranks of an ideal model are uniform") {
  SamplingBox box = unit_box(1);
  Rng rng(17);
  const double slope = 10.0;
  const RatioModel model = laplace_model(box, 0, slope, rng);
  const Simulator sim = laplace_simulator(0, 1.0 / slope);

  const std::size_t n = 200;
  std::vector<double> ranks;
  for (std::size_t j = 0; j < n; ++j) {
    Rng rep = Rng::stream(31, j);
    const std::vector<double> theta = box.sample(rep);
    const TimeSeries series = sim(theta, rep);
    const std::vector<double> summary = encode(model.encoder, series);
    ranks.push_back(rank_statistic(
        model, series, theta,
        [&](const std::vector<double>& t) {
          return log_ratio_from_summary(model, summary, t);
        },
        100, rep, 63));
  }
  std::sort(ranks.begin(), ranks.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max(d, std::fabs(ranks[i] - (i + 1.0) / n));
    d = std::max(d, std::fabs(ranks[i] - static_cast<double>(i) / n));
  }
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)) + 0.02);
}

TEST_CASE("report CSV carries curves and the summary metrics") {
  DiagnosticsReport report;
  report.global.alpha = {0.0, 0.5, 1.0};
  report.global.coverage = {1.0, 0.5, 0.0};
  report.per_block.push_back(report.global);
  report.w_global = wasserstein_w(report.global);
  report.w_per_block.push_back(report.w_global);
  report.holdout_metrics = {0.69, 0.5, -1.2, 1.0};
  report.ece = 0.01;
  const std::string csv = report.to_csv();
  CHECK(csv.find("alpha,coverage,block") == 0);
  CHECK(csv.find(",global") != std::string::npos);
  CHECK(csv.find("w_global,0") != std::string::npos);
  CHECK(csv.find("ece,") != std::string::npos);
  CHECK(csv.find("B,1") != std::string::npos);
}
