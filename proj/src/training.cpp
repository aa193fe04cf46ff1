#include "trawlsbi/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace trawlsbi {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

std::vector<std::size_t> shift_permutation(std::size_t n, Rng& rng,
                                           bool derangement) {
  std::vector<std::size_t> sigma(n);
  if (!derangement) {
    for (std::size_t j = 0; j < n; ++j) sigma[j] = (j + 1) % n;
    return sigma;
  }
  // Rejection-sampled random derangement (fast for any practical n).
  std::iota(sigma.begin(), sigma.end(), 0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (std::size_t j = n; j-- > 1;) {
      const std::size_t k =
          static_cast<std::size_t>(rng.uniform() * (j + 1));
      std::swap(sigma[j], sigma[std::min(k, j)]);
    }
    bool ok = true;
    for (std::size_t j = 0; j < n; ++j)
      if (sigma[j] == j) ok = false;
    if (ok) return sigma;
  }
  throw std::runtime_error("make_nre_batch: derangement sampling failed");
}

}  // namespace

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  unsigned int workers =
      threads > 0 ? static_cast<unsigned int>(threads)
                  : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned int>(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (unsigned int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

TrainBatch make_nre_batch(const std::vector<JointPair>& pairs, Rng& rng,
                          bool derangement) {
  const std::size_t n = pairs.size();
  require(n >= 2, "make_nre_batch: need at least two pairs");
  const std::vector<std::size_t> sigma = shift_permutation(n, rng, derangement);
  TrainBatch b;
  for (std::size_t j = 0; j < n; ++j) {
    b.thetas.push_back(pairs[j].theta);
    b.labels.push_back(1);
    b.source.push_back(j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    b.thetas.push_back(pairs[sigma[j]].theta);
    b.labels.push_back(0);
    b.source.push_back(j);
  }
  return b;
}

TrainBatch make_tre_batch(const std::vector<JointPair>& pairs,
                          const SamplingBox& box, std::size_t block_index,
                          Rng& rng) {
  const std::size_t n = pairs.size();
  require(n >= 2, "make_tre_batch: need at least two pairs");
  box.validate();
  require(block_index < box.blocks.size(), "make_tre_batch: block index");
  const Block& blk = box.blocks[block_index];
  const int dim = box.dim();
  TrainBatch b;
  auto resample_from = [&](std::vector<double> theta, int from) {
    for (int i = from; i < dim; ++i)
      theta[i] = rng.uniform(box.lo[i], box.hi[i]);
    return theta;
  };
  for (std::size_t j = 0; j < n; ++j) {
    b.thetas.push_back(
        resample_from(pairs[j].theta, blk.start + blk.size));
    b.labels.push_back(1);
    b.source.push_back(j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    b.thetas.push_back(resample_from(pairs[j].theta, blk.start));
    b.labels.push_back(0);
    b.source.push_back(j);
  }
  return b;
}

Holdout make_holdout(const SamplingBox& box, const Simulator& simulator,
                     std::size_t n, Rng& rng) {
  box.validate();
  require(n >= 2, "make_holdout: need at least two pairs");
  Holdout h;
  h.pairs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    h.pairs[j].theta = box.sample(rng);
    h.pairs[j].series = simulator(h.pairs[j].theta, rng);
  }
  h.negatives.resize(box.blocks.size());
  for (std::size_t i = 0; i < box.blocks.size(); ++i) {
    const Block& blk = box.blocks[i];
    h.negatives[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> t = h.pairs[j].theta;
      for (int c = blk.start; c < box.dim(); ++c)
        t[c] = rng.uniform(box.lo[c], box.hi[c]);
      h.negatives[i][j] = std::move(t);
    }
  }
  h.product_thetas.resize(n);
  for (std::size_t j = 0; j < n; ++j) h.product_thetas[j] = box.sample(rng);
  return h;
}

namespace {

Metrics classifier_metrics(const std::vector<double>& pos_logits,
                           const std::vector<double>& neg_logits,
                           const std::vector<double>& pos_log_posterior) {
  Metrics m;
  const std::size_t n = pos_logits.size();
  double bce = 0.0, acc = 0.0, b = 0.0;
  for (double l : pos_logits) {
    bce += softplus(l) - l;
    if (l > 0.0) acc += 1.0;
    b += sigmoid(l);
  }
  m.B = b / n;
  b = 0.0;
  for (double l : neg_logits) {
    bce += softplus(l);
    if (l <= 0.0) acc += 1.0;
    b += sigmoid(l);
  }
  m.B += b / n;
  m.bce = bce / (2.0 * n);
  m.accuracy = acc / (2.0 * n);
  double s = 0.0;
  for (double v : pos_log_posterior) s += v;
  m.S = s / n;
  return m;
}

}  // namespace

Metrics metrics(const RatioModel& model, const Holdout& holdout) {
  model.validate();
  const std::size_t n = holdout.pairs.size();
  require(n > 0, "metrics: empty holdout");
  std::vector<double> pos(n), neg(n), post(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> summary =
        encode(model.encoder, holdout.pairs[j].series);
    pos[j] = log_ratio_from_summary(model, summary, holdout.pairs[j].theta);
    neg[j] =
        log_ratio_from_summary(model, summary, holdout.product_thetas[j]);
    post[j] = pos[j] + model.box.log_density();
  }
  return classifier_metrics(pos, neg, post);
}

Metrics head_metrics(const RatioModel& model, std::size_t head,
                     const Holdout& holdout) {
  model.validate();
  require(head < model.heads.size(), "head_metrics: head index");
  const std::size_t n = holdout.pairs.size();
  require(n > 0, "head_metrics: empty holdout");
  std::vector<double> pos(n), neg(n), post(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> summary =
        encode(model.encoder, holdout.pairs[j].series);
    pos[j] = head_log_ratio(model, head, summary, holdout.pairs[j].theta);
    neg[j] = head_log_ratio(model, head, summary, holdout.negatives[head][j]);
    post[j] =
        pos[j] - model.box.block_log_volume(model.heads[head].block);
  }
  return classifier_metrics(pos, neg, post);
}

std::vector<double> kl_per_stage(const RatioModel& model,
                                 const Holdout& holdout) {
  model.validate();
  const std::size_t n = holdout.pairs.size();
  require(n > 0, "kl_per_stage: empty holdout");
  std::vector<double> s(model.heads.size(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> summary =
        encode(model.encoder, holdout.pairs[j].series);
    for (std::size_t i = 0; i < model.heads.size(); ++i)
      s[i] += head_log_ratio(model, i, summary, holdout.pairs[j].theta);
  }
  for (double& v : s) v /= static_cast<double>(n);
  return s;
}

std::string MetricTrace::to_csv() const {
  std::ostringstream out;
  out << "iteration,head,bce,acc,S,B\n";
  out.precision(17);
  for (const Row& r : rows)
    out << r.iteration << ',' << r.head << ',' << r.bce << ',' << r.acc << ','
        << r.S << ',' << r.B << '\n';
  return out.str();
}

TrainResult train(const SamplingBox& box, const Simulator& simulator,
                  const EncoderSpec& enc, const Hyperparams& hp,
                  std::uint64_t seed) {
  box.validate();
  require(hp.batch_pairs >= 2, "train: need at least two pairs per batch");

  Rng init_rng = Rng::stream(seed, 0);
  TrainResult result;
  result.model =
      make_ratio_model(enc, box, hp.head_hidden, hp.dropout, init_rng);
  RatioModel& model = result.model;
  const bool recurrent = enc.kind == EncoderKind::Recurrent;

  Rng holdout_rng = Rng::stream(seed, 1);
  const Holdout holdout =
      make_holdout(box, simulator, hp.holdout_pairs, holdout_rng);

  std::vector<nn::Adam> head_opts(model.heads.size());
  for (std::size_t i = 0; i < model.heads.size(); ++i) {
    head_opts[i].lr = hp.lr;
    head_opts[i].horizon = hp.iterations;
    head_opts[i].attach(model.heads[i].mlp.params());
  }
  nn::Adam enc_opt;
  if (recurrent) {
    enc_opt.lr = hp.lr;
    enc_opt.horizon = hp.iterations;
    enc_opt.attach(model.encoder.gru.params());
  }

  // Stream id layout: 0 init, 1 holdout, 2 dropout/batch bookkeeping,
  // 3.. one per simulated pair (strictly increasing, never reused).
  Rng step_rng = Rng::stream(seed, 2);
  std::uint64_t sim_stream = 3;

  std::vector<double> initial_loss(model.heads.size(), -1.0);
  int divergence_run = 0;
  std::vector<JointPair> pairs(hp.batch_pairs);
  for (std::size_t it = 0; it < hp.iterations; ++it) {
    const std::uint64_t base = sim_stream;
    sim_stream += hp.batch_pairs;
    parallel_for(hp.batch_pairs, hp.threads, [&](std::size_t j) {
      Rng r = Rng::stream(seed, base + j);
      pairs[j].theta = box.sample(r);
      pairs[j].series = simulator(pairs[j].theta, r);
    });
    // Shared encodings across heads (summary encoder only).
    std::vector<std::vector<double>> summaries;
    if (!recurrent) {
      summaries.resize(hp.batch_pairs);
      parallel_for(hp.batch_pairs, hp.threads, [&](std::size_t j) {
        summaries[j] = encode(model.encoder, pairs[j].series);
      });
    }

    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < model.heads.size(); ++i) {
      const TrainBatch tb = make_tre_batch(pairs, box, i, step_rng);
      HeadBatch hb;
      hb.thetas = tb.thetas;
      hb.labels = tb.labels;
      for (std::size_t r = 0; r < tb.source.size(); ++r) {
        if (recurrent)
          hb.series.push_back(&pairs[tb.source[r]].series);
        else
          hb.summaries.push_back(summaries[tb.source[r]]);
      }
      const double loss = backward_and_step(
          model, i, hb, head_opts[i], recurrent ? &enc_opt : nullptr,
          step_rng);
      if (initial_loss[i] < 0.0) initial_loss[i] = std::max(loss, 1e-12);
      worst_ratio = std::max(worst_ratio, loss / initial_loss[i]);
    }
    if (worst_ratio > hp.divergence_factor) {
      if (++divergence_run >= hp.divergence_patience) {
        result.diverged = true;
        break;
      }
    } else {
      divergence_run = 0;
    }

    if (hp.eval_interval > 0 &&
        ((it + 1) % hp.eval_interval == 0 || it + 1 == hp.iterations)) {
      for (std::size_t i = 0; i < model.heads.size(); ++i) {
        const Metrics m = head_metrics(model, i, holdout);
        result.trace.rows.push_back(
            {it + 1, i, m.bce, m.accuracy, m.S, m.B});
      }
    }
  }
  return result;
}

}  // namespace trawlsbi
