#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trawlsbi/calibration.hpp"
#include "trawlsbi/nn.hpp"
#include "trawlsbi/rng.hpp"
#include "trawlsbi/trawl.hpp"

namespace trawlsbi {

// Contiguous coordinate range [start, start + size) of the parameter vector.
struct Block {
  int start = 0;
  int size = 1;
};

// Uniform factorized sampling region with its block layout.
struct SamplingBox {
  std::vector<double> lo, hi;
  std::vector<Block> blocks;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;  // lo < hi, blocks partition 1..dim in order
  bool contains(const std::vector<double>& theta) const;
  std::vector<double> sample(Rng& rng) const;
  // log density of the uniform box: -sum log(hi - lo).
  double log_density() const;
  double block_log_volume(const Block& b) const;
};

enum class EncoderKind { SummaryStats, Recurrent };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::SummaryStats;
  int lags = 20;     // SummaryStats: ACF lags 1..L
  int moments = 4;   // SummaryStats: standardized moment count
  int hidden = 16;   // Recurrent: hidden width
  int layers = 1;    // Recurrent: stacked layers

  int output_dim() const {
    return kind == EncoderKind::SummaryStats ? lags + moments : hidden;
  }
};

struct Encoder {
  EncoderSpec spec;
  nn::Gru gru;  // used only by the Recurrent kind
};

// Per-block classifier head. Input layout: encoder summary, then the
// conditioning prefix theta[0..start), then the block itself.
struct BlockHead {
  Block block;
  std::vector<int> hidden_sizes;
  double dropout = 0.05;
  nn::Mlp mlp;
};

struct RatioModel {
  int version = 1;
  Encoder encoder;
  std::vector<BlockHead> heads;
  SamplingBox box;
  std::vector<CalibrationMap> calibration;  // empty, or one map per head

  void validate() const;
};

// Builds an initialized model whose heads follow box.blocks in order.
RatioModel make_ratio_model(const EncoderSpec& enc, const SamplingBox& box,
                            const std::vector<int>& head_hidden,
                            double dropout, Rng& rng);

// Summary vector for a series; SummaryStats needs length > lags.
std::vector<double> encode(const Encoder& enc, const TimeSeries& series);

// Logit of head i: MLP output plus the constant -log p(block) of the
// uniform box. Calibrated through the head's map when one is present;
// the _raw variant always bypasses calibration. Throws when theta leaves
// the box.
double head_log_ratio(const RatioModel& model, std::size_t head,
                      const std::vector<double>& summary,
                      const std::vector<double>& theta);
double head_log_ratio_raw(const RatioModel& model, std::size_t head,
                          const std::vector<double>& summary,
                          const std::vector<double>& theta);

// Sum of all head logits with the summary computed once.
double log_ratio(const RatioModel& model, const TimeSeries& series,
                 const std::vector<double>& theta);
double log_ratio_from_summary(const RatioModel& model,
                              const std::vector<double>& summary,
                              const std::vector<double>& theta);

// One head's training minibatch. For the SummaryStats encoder the summaries
// are precomputed; the Recurrent encoder trains through the raw series.
struct HeadBatch {
  std::vector<std::vector<double>> summaries;
  std::vector<const TimeSeries*> series;
  std::vector<std::vector<double>> thetas;
  std::vector<int> labels;  // balanced
};

// One Adam step on the binary cross-entropy of the given head; returns the
// batch loss. enc_opt is required (and the encoder updated) only for the
// Recurrent encoder.
double backward_and_step(RatioModel& model, std::size_t head,
                         const HeadBatch& batch, nn::Adam& head_opt,
                         nn::Adam* enc_opt, Rng& rng);

// Versioned JSON checkpoint; reload reproduces log_ratio bit-for-bit.
std::string model_to_json(const RatioModel& model);
RatioModel model_from_json(const std::string& text);
void save_model(const RatioModel& model, const std::string& path);
RatioModel load_model(const std::string& path);

}  // namespace trawlsbi
