#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trawlsbi/classifier.hpp"

namespace trawlsbi {

struct JointPair {
  std::vector<double> theta;
  TimeSeries series;
};

// Balanced two-class batch over full-length parameter rows; `source[r]`
// names the joint pair supplying the series of row r.
struct TrainBatch {
  std::vector<std::vector<double>> thetas;
  std::vector<int> labels;
  std::vector<std::size_t> source;
};

// Class 1 = joint pairs, class 0 = series matched with shifted parameters
// (cyclic shift by default, random derangement optionally).
TrainBatch make_nre_batch(const std::vector<JointPair>& pairs, Rng& rng,
                          bool derangement = false);

// Telescoping classes for the given block: class 1 keeps the true prefix and
// block and redraws the tail from the box; class 0 keeps only the prefix.
TrainBatch make_tre_batch(const std::vector<JointPair>& pairs,
                          const SamplingBox& box, std::size_t block_index,
                          Rng& rng);

struct Hyperparams {
  std::size_t iterations = 4000;
  std::size_t batch_pairs = 32;  // rows per class; 64 rows per batch
  double lr = 5e-4;
  double dropout = 0.05;
  std::vector<int> head_hidden = {64, 64};
  std::size_t holdout_pairs = 500;
  std::size_t eval_interval = 200;
  double divergence_factor = 10.0;
  int divergence_patience = 100;
  int threads = 0;  // 0 = hardware concurrency
};

struct Metrics {
  double bce = 0.0;
  double accuracy = 0.0;
  double S = 0.0;  // mean log posterior of the true parameters
  double B = 0.0;  // balancing statistic, 1 for the Bayes-optimal classifier
};

struct MetricTrace {
  struct Row {
    std::size_t iteration;
    std::size_t head;
    double bce, acc, S, B;
  };
  std::vector<Row> rows;
  std::string to_csv() const;
};

// Fixed evaluation set: joint pairs plus pre-drawn per-head class-0
// parameters and fully resampled parameters for model-level metrics.
struct Holdout {
  std::vector<JointPair> pairs;
  std::vector<std::vector<std::vector<double>>> negatives;  // [head][pair]
  std::vector<std::vector<double>> product_thetas;
};

Holdout make_holdout(const SamplingBox& box, const Simulator& simulator,
                     std::size_t n, Rng& rng);

// Model-level metrics of the composed classifier sig(log_ratio).
Metrics metrics(const RatioModel& model, const Holdout& holdout);
// Per-head metrics of classifier i on its telescoping classes.
Metrics head_metrics(const RatioModel& model, std::size_t head,
                     const Holdout& holdout);

// S_i = mean head logit over holdout samples of the stage-i interpolating
// density; the sum estimates the joint-vs-product Kullback-Leibler
// divergence.
std::vector<double> kl_per_stage(const RatioModel& model,
                                 const Holdout& holdout);

struct TrainResult {
  RatioModel model;
  MetricTrace trace;
  bool diverged = false;
};

// Trains one head per block on fresh on-the-fly batches shared across heads
// within an iteration. Deterministic for a fixed seed and thread-safe batch
// simulation via per-index rng streams.
TrainResult train(const SamplingBox& box, const Simulator& simulator,
                  const EncoderSpec& enc, const Hyperparams& hp,
                  std::uint64_t seed);

// Deterministic index-sharded parallel loop used for batch simulation and
// replicate studies.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace trawlsbi
