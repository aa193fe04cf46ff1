#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "trawlsbi/calibration.hpp"
#include "trawlsbi/classifier.hpp"

using namespace trawlsbi;

namespace {

double logit(double s) { return std::log(s / (1.0 - s)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

CalibrationSet bernoulli_set(std::size_t n, Rng& rng, double distort = 1.0) {
  CalibrationSet set;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform(0.02, 0.98);
    set.labels.push_back(rng.uniform() < s ? 1 : 0);
    set.scores.push_back(distort == 1.0 ? s : sigmoid(distort * logit(s)));
  }
  return set;
}

bool monotone_on_grid(const CalibrationMap& map) {
  double prev = apply(map, 0.0);
  for (int i = 1; i <= 1024; ++i) {
    const double cur = apply(map, i / 1024.0);
    if (cur < prev - 1e-12) return false;
    if (cur < 0.0 || cur > 1.0) return false;
    prev = cur;
  }
  return true;
}

double sse(const CalibrationMap& map, const CalibrationSet& set) {
  double s = 0.0;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    const double r = apply(map, set.scores[i]) - set.labels[i];
    s += r * r;
  }
  return s;
}

}  // namespace

TEST_CASE("closed-form map values") {
  const CalibrationMap beta_id{CalibKind::Beta, {1.0, 1.0, 0.0}, {}, {}};
  CHECK(apply(beta_id, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(apply(beta_id, 0.77) == doctest::Approx(0.77).epsilon(1e-12));

  const CalibrationMap beta_sym{CalibKind::Beta, {2.0, 2.0, 0.0}, {}, {}};
  CHECK(apply(beta_sym, 0.5) == doctest::Approx(0.5).epsilon(1e-12));

  const CalibrationMap platt{CalibKind::Platt, {1.0, 0.0}, {}, {}};
  CHECK(apply(platt, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

  const CalibrationMap ident{CalibKind::Identity, {}, {}, {}};
  CHECK(apply(ident, 0.42) == 0.42);

  CHECK_THROWS_AS(apply(ident, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(apply(ident, 1.01), std::invalid_argument);
}

TEST_CASE("calibrated synthetic scores fit back to the identity") {
  Rng rng(1);
  const CalibrationSet set = bernoulli_set(100000, rng);
  const CalibrationMap map = fit_beta(set);
  REQUIRE(map.kind == CalibKind::Beta);
  CHECK(std::fabs(map.params[0] - 1.0) < 0.1);
  CHECK(std::fabs(map.params[1] - 1.0) < 0.1);
  CHECK(std::fabs(map.params[2]) < 0.1);
  CHECK(monotone_on_grid(map));
}

TEST_CASE("beta calibration inverts a synthetic overconfidence distortion") {
  Rng rng(2);
  const CalibrationSet set = bernoulli_set(50000, rng, 3.0);
  const double pre = ece(set, 15);
  const CalibrationMap map = fit_beta(set);
  CalibrationSet post = set;
  for (double& s : post.scores) s = apply(map, s);
  CHECK(ece(post, 15) < pre);
  CHECK(ece(post, 15) < 0.2 * pre);
  // The inverse of sigmoid(3 logit(s)) has slope 1/3 in logit space.
  CHECK(map.params[0] == doctest::Approx(1.0 / 3.0).epsilon(0.15));
  CHECK(monotone_on_grid(map));

  const CalibrationMap pmap = fit_platt(set);
  CalibrationSet ppost = set;
  for (double& s : ppost.scores) s = apply(pmap, s);
  CHECK(ece(ppost, 15) < pre);
  CHECK(monotone_on_grid(pmap));
}

TEST_CASE("single-class calibration sets are rejected") {
  CalibrationSet set;
  for (int i = 0; i < 200; ++i) {
    set.scores.push_back(0.3 + 0.001 * i);
    set.labels.push_back(1);
  }
  CHECK_THROWS_AS(fit_beta(set), std::invalid_argument);
  CHECK_THROWS_AS(fit_platt(set), std::invalid_argument);
  CHECK_THROWS_AS(fit_isotonic(set), std::invalid_argument);
}

TEST_CASE("isotonic regression pools adjacent violators") {
  // Two points in violation pool to their common mean.
  CalibrationSet two;
  two.scores = {0.2, 0.8};
  two.labels = {1, 0};
  const CalibrationMap pooled = fit_isotonic(two);
  CHECK(apply(pooled, 0.2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(apply(pooled, 0.8) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(apply(pooled, 0.01) == doctest::Approx(0.5).epsilon(1e-12));

  // Already-monotone labels are reproduced exactly.
  CalibrationSet mono;
  mono.scores = {0.1, 0.3, 0.6, 0.9};
  mono.labels = {0, 0, 1, 1};
  const CalibrationMap id = fit_isotonic(mono);
  CHECK(apply(id, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(apply(id, 0.9) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(monotone_on_grid(id));
}

TEST_CASE("isotonic fit matches brute force over monotone step functions") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform() * 5.0);  // 4..8 points
    CalibrationSet set;
    std::vector<double> scores;
    for (int i = 0; i < n; ++i)
      scores.push_back((i + 1 + rng.uniform() * 0.5) /
                       (n + 2.0));  // distinct, ascending
    for (int i = 0; i < n; ++i) {
      set.scores.push_back(scores[i]);
      set.labels.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    if (std::count(set.labels.begin(), set.labels.end(), 1) == 0 ||
        std::count(set.labels.begin(), set.labels.end(), 1) == n)
      continue;
    const CalibrationMap map = fit_isotonic(set);
    const double pava_sse = sse(map, set);

    // Enumerate all contiguous partitions with nondecreasing block means.
    double best = 1e300;
    for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
      std::vector<double> fit(n);
      double prev_mean = -1.0;
      bool ok = true;
      int start = 0;
      for (int i = 0; i < n && ok; ++i) {
        if (i == n - 1 || (mask >> i) & 1) {
          double mean = 0.0;
          for (int j = start; j <= i; ++j) mean += set.labels[j];
          mean /= (i - start + 1);
          if (mean < prev_mean) ok = false;
          for (int j = start; j <= i; ++j) fit[j] = mean;
          prev_mean = mean;
          start = i + 1;
        }
      }
      if (!ok) continue;
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += (fit[i] - set.labels[i]) * (fit[i] - set.labels[i]);
      best = std::min(best, s);
    }
    CHECK(pava_sse == doctest::Approx(best).epsilon(1e-9));
    CHECK(monotone_on_grid(map));
  }
}

TEST_CASE("expected calibration error closed cases") {
  CalibrationSet half;
  for (int i = 0; i < 1000; ++i) {
    half.scores.push_back(0.5);
    half.labels.push_back(i % 2);
  }
  CHECK(ece(half, 10, EceBinning::Uniform) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ece(half, 10, EceBinning::Adaptive) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CalibrationSet sure;
  for (int i = 0; i < 1000; ++i) {
    sure.scores.push_back(1.0);
    sure.labels.push_back(1);
  }
  CHECK(ece(sure, 10) == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(5);
  CalibrationSet coin;
  for (int i = 0; i < 10000; ++i) {
    coin.scores.push_back(0.9);
    coin.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  CHECK(ece(coin, 10) == doctest::Approx(0.4).epsilon(0.05));
  CHECK_THROWS_AS(ece(coin, 0), std::invalid_argument);
}

TEST_CASE("identity calibration leaves model logits unchanged") {
  SamplingBox box;
  box.lo = {0.0, 0.0};
  box.hi = {1.0, 2.0};
  box.blocks = {{0, 1}, {1, 1}};
  EncoderSpec enc;
  enc.lags = 2;
  enc.moments = 2;
  Rng rng(7);
  RatioModel model = make_ratio_model(enc, box, {6}, 0.0, rng);
  RatioModel with_id = model;
  with_id.calibration.assign(2, {CalibKind::Identity, {}, {}, {}});
  const std::vector<double> summary(4, 0.1);
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> theta = box.sample(rng);
    CHECK(log_ratio_from_summary(with_id, summary, theta) ==
          log_ratio_from_summary(model, summary, theta));
  }
}

TEST_CASE("monotone maps preserve the per-head argmax") {
  SamplingBox box;
  box.lo = {0.0};
  box.hi = {1.0};
  box.blocks = {{0, 1}};
  EncoderSpec enc;
  enc.lags = 2;
  enc.moments = 2;
  Rng rng(9);
  RatioModel model = make_ratio_model(enc, box, {10, 8}, 0.0, rng);
  RatioModel cal = model;
  cal.calibration.push_back({CalibKind::Beta, {0.4, 2.1, -0.3}, {}, {}});
  const std::vector<double> summary(4, -0.2);
  std::size_t argmax_raw = 0, argmax_cal = 0;
  double best_raw = -1e300, best_cal = -1e300;
  for (int g = 0; g <= 200; ++g) {
    const std::vector<double> theta{g / 200.0};
    const double raw = head_log_ratio(model, 0, summary, theta);
    const double c = head_log_ratio(cal, 0, summary, theta);
    if (raw > best_raw) {
      best_raw = raw;
      argmax_raw = g;
    }
    if (c > best_cal) {
      best_cal = c;
      argmax_cal = g;
    }
  }
  CHECK(argmax_raw == argmax_cal);
}

TEST_CASE("fitting per-head maps flags degenerate score collections") {
  SamplingBox box;
  box.lo = {0.0};
  box.hi = {1.0};
  box.blocks = {{0, 1}};
  EncoderSpec enc;
  enc.lags = 2;
  enc.moments = 2;
  Rng rng(11);
  RatioModel model = make_ratio_model(enc, box, {4}, 0.0, rng);
  for (nn::Param* p : model.heads[0].mlp.params())
    std::fill(p->value.begin(), p->value.end(), 0.0);
  model.heads[0].mlp.layers.back().b.value[0] = 100.0;  // scores stick at 1

  const Simulator sim = [](const std::vector<double>& theta, Rng& r) {
    TimeSeries s;
    for (int i = 0; i < 10; ++i) s.values.push_back(theta[0] + r.normal());
    return s;
  };
  Rng crng(13);
  std::vector<std::string> warnings;
  const RatioModel out =
      calibrate_model(model, sim, 100, crng, CalibKind::Beta, &warnings);
  REQUIRE(out.calibration.size() == 1);
  CHECK(out.calibration[0].kind == CalibKind::Identity);
  CHECK(warnings.size() == 1);
}

TEST_CASE("calibrating a healthy model produces monotone per-head maps") {
  SamplingBox box;
  box.lo = {-1.0};
  box.hi = {1.0};
  box.blocks = {{0, 1}};
  EncoderSpec enc;
  enc.lags = 2;
  enc.moments = 2;
  Rng rng(15);
  RatioModel model = make_ratio_model(enc, box, {8}, 0.0, rng);
  const Simulator sim = [](const std::vector<double>& theta, Rng& r) {
    TimeSeries s;
    for (int i = 0; i < 12; ++i) s.values.push_back(theta[0] + r.normal());
    return s;
  };
  Rng crng(17);
  const RatioModel out = calibrate_model(model, sim, 400, crng);
  REQUIRE(out.calibration.size() == 1);
  CHECK(out.calibration[0].kind == CalibKind::Beta);
  CHECK(monotone_on_grid(out.calibration[0]));
}
