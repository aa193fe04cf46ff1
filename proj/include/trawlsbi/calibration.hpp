#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trawlsbi/rng.hpp"
#include "trawlsbi/trawl.hpp"

namespace trawlsbi {

struct RatioModel;  // classifier.hpp

enum class CalibKind { Identity, Platt, Beta, Isotonic };

// Monotone recalibration map on [0, 1].
//   Platt:    params = {A, B},   s -> 1 / (1 + exp(-A s + B)), A > 0
//   Beta:     params = {a, b, c}, s -> 1 / (1 + e^{-c} (1-s)^b s^{-a})
//   Isotonic: stepwise-constant with sorted breakpoints
struct CalibrationMap {
  CalibKind kind = CalibKind::Identity;
  std::vector<double> params;
  std::vector<double> breakpoints;  // Isotonic only, ascending
  std::vector<double> values;       // Isotonic block values, nondecreasing
};

struct CalibrationSet {
  std::vector<double> scores;  // classifier outputs in [0, 1]
  std::vector<int> labels;     // 0 or 1
};

double apply(const CalibrationMap& map, double s);

// Maximum-likelihood logistic fits on epsilon-clipped scores (clip 1e-7).
// Both require samples from both classes; slope parameters are clamped to
// at least 1e-6 to keep the maps monotone.
CalibrationMap fit_platt(const CalibrationSet& set);
CalibrationMap fit_beta(const CalibrationSet& set);

// Pool-adjacent-violators least-squares monotone fit.
CalibrationMap fit_isotonic(const CalibrationSet& set);

enum class EceBinning { Uniform, Adaptive };

// Expected calibration error with predictions y_hat = 1(c >= 0.5) and
// confidence max(c, 1-c); Adaptive = equal-frequency bins.
double ece(const CalibrationSet& set, int bins,
           EceBinning scheme = EceBinning::Adaptive);

using Simulator =
    std::function<TimeSeries(const std::vector<double>&, Rng&)>;

// Fits a fresh per-head calibration map (default family: Beta) from
// n_pairs newly simulated joint samples and returns the calibrated model.
// Heads whose scores collapse onto 0/1 get a warning entry and keep an
// identity map.
RatioModel calibrate_model(const RatioModel& model, const Simulator& simulator,
                           std::size_t n_pairs, Rng& rng,
                           CalibKind family = CalibKind::Beta,
                           std::vector<std::string>* warnings = nullptr);

}  // namespace trawlsbi
