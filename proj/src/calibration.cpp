#include "trawlsbi/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "trawlsbi/classifier.hpp"

namespace trawlsbi {

namespace {

constexpr double kClip = 1e-7;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_set(const CalibrationSet& set) {
  require(!set.scores.empty() && set.scores.size() == set.labels.size(),
          "calibration: empty or mismatched score/label set");
  int ones = 0;
  for (int y : set.labels) {
    require(y == 0 || y == 1, "calibration: labels must be 0/1");
    ones += y;
  }
  require(ones > 0 && ones < static_cast<int>(set.labels.size()),
          "calibration: both classes must be present");
  for (double s : set.scores)
    require(s >= 0.0 && s <= 1.0, "calibration: scores must lie in [0, 1]");
}

// Newton-Raphson logistic regression: p = sig(X beta). Features exclude the
// intercept; it is appended as the last coefficient.
std::vector<double> logistic_mle(const std::vector<std::vector<double>>& feats,
                                 const std::vector<int>& labels) {
  const std::size_t n = feats.size();
  const std::size_t d = feats[0].size() + 1;
  std::vector<double> beta(d, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> grad(d, 0.0);
    std::vector<double> hess(d * d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double z = beta[d - 1];
      for (std::size_t k = 0; k + 1 < d; ++k) z += beta[k] * feats[j][k];
      const double p = sigmoid(z);
      const double r = labels[j] - p;
      const double w = std::max(p * (1.0 - p), 1e-12);
      for (std::size_t k = 0; k < d; ++k) {
        const double xk = k + 1 < d ? feats[j][k] : 1.0;
        grad[k] += r * xk;
        for (std::size_t l = 0; l < d; ++l) {
          const double xl = l + 1 < d ? feats[j][l] : 1.0;
          hess[k * d + l] += w * xk * xl;
        }
      }
    }
    for (std::size_t k = 0; k < d; ++k) hess[k * d + k] += 1e-9;
    // Solve hess * step = grad by Gaussian elimination with partial pivoting.
    std::vector<double> a = hess, b = grad, step(d, 0.0);
    for (std::size_t col = 0; col < d; ++col) {
      std::size_t piv = col;
      for (std::size_t r2 = col + 1; r2 < d; ++r2)
        if (std::fabs(a[r2 * d + col]) > std::fabs(a[piv * d + col])) piv = r2;
      if (std::fabs(a[piv * d + col]) < 1e-14)
        throw std::runtime_error("calibration: singular Newton system");
      if (piv != col) {
        for (std::size_t c2 = 0; c2 < d; ++c2)
          std::swap(a[col * d + c2], a[piv * d + c2]);
        std::swap(b[col], b[piv]);
      }
      for (std::size_t r2 = col + 1; r2 < d; ++r2) {
        const double f = a[r2 * d + col] / a[col * d + col];
        for (std::size_t c2 = col; c2 < d; ++c2)
          a[r2 * d + c2] -= f * a[col * d + c2];
        b[r2] -= f * b[col];
      }
    }
    for (std::size_t row = d; row-- > 0;) {
      double s = b[row];
      for (std::size_t c2 = row + 1; c2 < d; ++c2)
        s -= a[row * d + c2] * step[c2];
      step[row] = s / a[row * d + row];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      beta[k] += step[k];
      norm = std::max(norm, std::fabs(step[k]));
    }
    if (norm < 1e-10) return beta;
  }
  throw std::runtime_error("calibration: Newton iteration did not converge");
}

}  // namespace

double apply(const CalibrationMap& map, double s) {
  require(s >= 0.0 && s <= 1.0, "apply: score must lie in [0, 1]");
  switch (map.kind) {
    case CalibKind::Identity:
      return s;
    case CalibKind::Platt:
      return sigmoid(map.params[0] * s - map.params[1]);
    case CalibKind::Beta: {
      if (s <= 0.0) return 0.0;
      if (s >= 1.0) return 1.0;
      const double z = map.params[0] * std::log(s) -
                       map.params[1] * std::log1p(-s) + map.params[2];
      return sigmoid(z);
    }
    case CalibKind::Isotonic: {
      if (map.breakpoints.empty()) return s;
      auto it = std::upper_bound(map.breakpoints.begin(),
                                 map.breakpoints.end(), s);
      if (it == map.breakpoints.begin()) return map.values.front();
      const std::size_t idx = (it - map.breakpoints.begin()) - 1;
      return map.values[idx];
    }
  }
  throw std::logic_error("unreachable");
}

CalibrationMap fit_platt(const CalibrationSet& set) {
  check_set(set);
  std::vector<std::vector<double>> feats;
  feats.reserve(set.scores.size());
  for (double s : set.scores)
    feats.push_back({std::clamp(s, kClip, 1.0 - kClip)});
  const std::vector<double> beta = logistic_mle(feats, set.labels);
  CalibrationMap m;
  m.kind = CalibKind::Platt;
  m.params = {std::max(beta[0], 1e-6), -beta[1]};
  return m;
}

CalibrationMap fit_beta(const CalibrationSet& set) {
  check_set(set);
  std::vector<std::vector<double>> feats;
  feats.reserve(set.scores.size());
  for (double s0 : set.scores) {
    const double s = std::clamp(s0, kClip, 1.0 - kClip);
    feats.push_back({std::log(s), -std::log1p(-s)});
  }
  const std::vector<double> beta = logistic_mle(feats, set.labels);
  CalibrationMap m;
  m.kind = CalibKind::Beta;
  m.params = {std::max(beta[0], 1e-6), std::max(beta[1], 1e-6), beta[2]};
  return m;
}

CalibrationMap fit_isotonic(const CalibrationSet& set) {
  check_set(set);
  const std::size_t n = set.scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return set.scores[a] < set.scores[b];
  });
  // Merge identical scores, then pool adjacent violators.
  struct Blk {
    double score;   // first score of the block
    double sum, w;  // label sum and weight
  };
  std::vector<Blk> blocks;
  for (std::size_t r = 0; r < n; ++r) {
    const double s = set.scores[idx[r]];
    const double y = set.labels[idx[r]];
    if (!blocks.empty() && blocks.back().w > 0.0 &&
        set.scores[idx[r - 1]] == s) {
      blocks.back().sum += y;
      blocks.back().w += 1.0;
    } else {
      blocks.push_back({s, y, 1.0});
    }
    while (blocks.size() >= 2) {
      Blk& b = blocks.back();
      Blk& a = blocks[blocks.size() - 2];
      if (a.sum / a.w <= b.sum / b.w) break;
      a.sum += b.sum;
      a.w += b.w;
      blocks.pop_back();
    }
  }
  CalibrationMap m;
  m.kind = CalibKind::Isotonic;
  for (const Blk& b : blocks) {
    m.breakpoints.push_back(b.score);
    m.values.push_back(b.sum / b.w);
  }
  return m;
}

double ece(const CalibrationSet& set, int bins, EceBinning scheme) {
  require(bins >= 1, "ece: bins must be positive");
  require(!set.scores.empty() && set.scores.size() == set.labels.size(),
          "ece: empty or mismatched set");
  const std::size_t n = set.scores.size();
  std::vector<double> conf(n);
  std::vector<int> correct(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = set.scores[i];
    const int pred = c >= 0.5 ? 1 : 0;
    conf[i] = std::max(c, 1.0 - c);
    correct[i] = pred == set.labels[i] ? 1 : 0;
  }
  double total = 0.0;
  if (scheme == EceBinning::Uniform) {
    std::vector<double> csum(bins, 0.0), asum(bins, 0.0);
    std::vector<int> cnt(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
      int b = static_cast<int>(conf[i] * bins);
      b = std::min(b, bins - 1);
      csum[b] += conf[i];
      asum[b] += correct[i];
      ++cnt[b];
    }
    for (int b = 0; b < bins; ++b)
      if (cnt[b] > 0)
        total += cnt[b] * std::fabs(asum[b] / cnt[b] - csum[b] / cnt[b]);
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return conf[a] < conf[b];
                     });
    const std::size_t base = n / bins, extra = n % bins;
    std::size_t pos = 0;
    for (int b = 0; b < bins; ++b) {
      const std::size_t size =
          base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
      if (size == 0) continue;
      double csum = 0.0, asum = 0.0;
      for (std::size_t r = 0; r < size; ++r) {
        csum += conf[idx[pos + r]];
        asum += correct[idx[pos + r]];
      }
      pos += size;
      total += size * std::fabs(asum / size - csum / size);
    }
  }
  return total / static_cast<double>(n);
}

RatioModel calibrate_model(const RatioModel& model, const Simulator& simulator,
                           std::size_t n_pairs, Rng& rng, CalibKind family,
                           std::vector<std::string>* warnings) {
  model.validate();
  require(n_pairs >= 2, "calibrate_model: need at least two pairs");
  require(family == CalibKind::Platt || family == CalibKind::Beta ||
              family == CalibKind::Isotonic || family == CalibKind::Identity,
          "calibrate_model: unsupported family");

  // Fresh joint samples; each head scores a class-1 row (its true block and
  // prefix) and a class-0 row (block resampled from the box).
  std::vector<std::vector<double>> thetas(n_pairs);
  std::vector<std::vector<double>> summaries(n_pairs);
  for (std::size_t j = 0; j < n_pairs; ++j) {
    thetas[j] = model.box.sample(rng);
    const TimeSeries x = simulator(thetas[j], rng);
    summaries[j] = encode(model.encoder, x);
  }

  RatioModel out = model;
  out.calibration.assign(model.heads.size(), CalibrationMap{});
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    CalibrationSet set;
    const Block& b = model.heads[h].block;
    for (std::size_t j = 0; j < n_pairs; ++j) {
      set.scores.push_back(sigmoid(
          head_log_ratio_raw(model, h, summaries[j], thetas[j])));
      set.labels.push_back(1);
      std::vector<double> t0 = thetas[j];
      for (int i = b.start; i < b.start + b.size; ++i)
        t0[i] = rng.uniform(model.box.lo[i], model.box.hi[i]);
      set.scores.push_back(sigmoid(
          head_log_ratio_raw(model, h, summaries[j], t0)));
      set.labels.push_back(0);
    }
    bool degenerate = true;
    for (double s : set.scores)
      if (s > 1e-6 && s < 1.0 - 1e-6) degenerate = false;
    if (degenerate || family == CalibKind::Identity) {
      if (degenerate && warnings)
        warnings->push_back("head " + std::to_string(h) +
                            ": scores saturated at 0/1, calibration "
                            "unreliable; keeping identity map");
      continue;  // identity map already in place
    }
    switch (family) {
      case CalibKind::Platt: out.calibration[h] = fit_platt(set); break;
      case CalibKind::Beta: out.calibration[h] = fit_beta(set); break;
      case CalibKind::Isotonic: out.calibration[h] = fit_isotonic(set); break;
      default: break;
    }
  }
  return out;
}

}  // namespace trawlsbi
