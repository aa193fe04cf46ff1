#include "trawlsbi/classifier.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace trawlsbi {

namespace {

using nlohmann::json;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

// log(s / (1 - s)) through the calibration map, composed in logit space
// where the map family permits it (avoids saturation at extreme logits).
double calibrated_logit(const CalibrationMap& map, double raw_logit) {
  switch (map.kind) {
    case CalibKind::Identity:
      return raw_logit;
    case CalibKind::Platt:
      // sig(A s - B) in probability space.
      return map.params[0] * sigmoid(raw_logit) - map.params[1];
    case CalibKind::Beta: {
      // logit = a log s - b log(1-s) + c with log sig(l) = -softplus(-l).
      const double log_s = -softplus(-raw_logit);
      const double log_1ms = -softplus(raw_logit);
      return map.params[0] * log_s - map.params[1] * log_1ms + map.params[2];
    }
    case CalibKind::Isotonic: {
      double p = apply(map, sigmoid(raw_logit));
      p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
      return std::log(p / (1.0 - p));
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<double> head_input(const RatioModel& model, std::size_t head,
                               const std::vector<double>& summary,
                               const std::vector<double>& theta) {
  const BlockHead& h = model.heads[head];
  require(static_cast<int>(summary.size()) == model.encoder.spec.output_dim(),
          "head input: summary dimension mismatch");
  require(theta.size() == model.box.lo.size(),
          "head input: theta dimension mismatch");
  std::vector<double> in;
  in.reserve(summary.size() + h.block.start + h.block.size);
  in.insert(in.end(), summary.begin(), summary.end());
  for (int i = 0; i < h.block.start + h.block.size; ++i)
    in.push_back(theta[i]);
  return in;
}

}  // namespace

void SamplingBox::validate() const {
  require(!lo.empty() && lo.size() == hi.size(),
          "SamplingBox: empty or mismatched bounds");
  for (std::size_t i = 0; i < lo.size(); ++i)
    require(lo[i] < hi[i], "SamplingBox: requires lo < hi per coordinate");
  require(!blocks.empty(), "SamplingBox: no blocks");
  int expect = 0;
  for (const Block& b : blocks) {
    require(b.start == expect && b.size >= 1,
            "SamplingBox: blocks must partition coordinates in order");
    expect += b.size;
  }
  require(expect == dim(), "SamplingBox: blocks must cover all coordinates");
}

bool SamplingBox::contains(const std::vector<double>& theta) const {
  if (theta.size() != lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
  return true;
}

std::vector<double> SamplingBox::sample(Rng& rng) const {
  std::vector<double> t(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) t[i] = rng.uniform(lo[i], hi[i]);
  return t;
}

double SamplingBox::log_density() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) s -= std::log(hi[i] - lo[i]);
  return s;
}

double SamplingBox::block_log_volume(const Block& b) const {
  double s = 0.0;
  for (int i = b.start; i < b.start + b.size; ++i)
    s += std::log(hi[i] - lo[i]);
  return s;
}

void RatioModel::validate() const {
  box.validate();
  require(heads.size() == box.blocks.size(),
          "RatioModel: one head per block required");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    require(heads[i].block.start == box.blocks[i].start &&
                heads[i].block.size == box.blocks[i].size,
            "RatioModel: head blocks must match the box layout");
    const int want = encoder.spec.output_dim() + heads[i].block.start +
                     heads[i].block.size;
    require(heads[i].mlp.sizes.front() == want,
            "RatioModel: head input dimension mismatch");
    require(heads[i].mlp.sizes.back() == 1,
            "RatioModel: heads emit a single logit");
  }
  require(calibration.empty() || calibration.size() == heads.size(),
          "RatioModel: calibration must cover every head or none");
}

RatioModel make_ratio_model(const EncoderSpec& enc, const SamplingBox& box,
                            const std::vector<int>& head_hidden,
                            double dropout, Rng& rng) {
  box.validate();
  RatioModel m;
  m.encoder.spec = enc;
  if (enc.kind == EncoderKind::Recurrent)
    m.encoder.gru.init(1, enc.hidden, enc.layers, "enc", rng);
  m.box = box;
  for (std::size_t i = 0; i < box.blocks.size(); ++i) {
    BlockHead h;
    h.block = box.blocks[i];
    h.hidden_sizes = head_hidden;
    h.dropout = dropout;
    std::vector<int> sizes;
    sizes.push_back(enc.output_dim() + h.block.start + h.block.size);
    sizes.insert(sizes.end(), head_hidden.begin(), head_hidden.end());
    sizes.push_back(1);
    h.mlp.init(sizes, dropout, "head" + std::to_string(i), rng);
    m.heads.push_back(std::move(h));
  }
  m.validate();
  return m;
}

std::vector<double> encode(const Encoder& enc, const TimeSeries& series) {
  const std::size_t n = series.values.size();
  if (enc.spec.kind == EncoderKind::SummaryStats) {
    const int L = enc.spec.lags, J = enc.spec.moments;
    require(n > static_cast<std::size_t>(L),
            "encode: series shorter than the lag count requires");
    double mean = 0.0;
    for (double v : series.values) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series.values) c0 += (v - mean) * (v - mean);
    std::vector<double> out;
    out.reserve(L + J);
    for (int h = 1; h <= L; ++h) {
      double c = 0.0;
      for (std::size_t i = 0; i + h < n; ++i)
        c += (series.values[i] - mean) * (series.values[i + h] - mean);
      out.push_back(c0 > 0.0 ? c / c0 : 0.0);
    }
    // Standardized sample moments: mean, sd, then standardized central
    // moments (order 4 reported as excess kurtosis).
    const double var = c0 / static_cast<double>(n);
    const double sd = std::sqrt(var);
    for (int j = 1; j <= J; ++j) {
      if (j == 1) {
        out.push_back(mean);
      } else if (j == 2) {
        out.push_back(sd);
      } else {
        double mj = 0.0;
        for (double v : series.values) mj += std::pow(v - mean, j);
        mj /= static_cast<double>(n);
        double stat = sd > 0.0 ? mj / std::pow(sd, j) : 0.0;
        if (j == 4) stat -= 3.0;
        out.push_back(stat);
      }
    }
    return out;
  }
  require(n >= 1, "encode: empty series");
  std::vector<std::vector<double>> xs(n, std::vector<double>(1));
  for (std::size_t i = 0; i < n; ++i) xs[i][0] = series.values[i];
  return gru_forward(enc.gru, xs);
}

double head_log_ratio_raw(const RatioModel& model, std::size_t head,
                          const std::vector<double>& summary,
                          const std::vector<double>& theta) {
  require(head < model.heads.size(), "head_log_ratio: head index");
  if (!model.box.contains(theta))
    throw std::domain_error(
        "head_log_ratio: theta outside the sampling box");
  const std::vector<double> in = head_input(model, head, summary, theta);
  const std::vector<double> out =
      mlp_forward(model.heads[head].mlp, in);
  // -log p(block) of the uniform box is + block log-volume.
  return out[0] + model.box.block_log_volume(model.heads[head].block);
}

double head_log_ratio(const RatioModel& model, std::size_t head,
                      const std::vector<double>& summary,
                      const std::vector<double>& theta) {
  const double raw = head_log_ratio_raw(model, head, summary, theta);
  if (model.calibration.empty()) return raw;
  return calibrated_logit(model.calibration[head], raw);
}

double log_ratio_from_summary(const RatioModel& model,
                              const std::vector<double>& summary,
                              const std::vector<double>& theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < model.heads.size(); ++i)
    s += head_log_ratio(model, i, summary, theta);
  return s;
}

double log_ratio(const RatioModel& model, const TimeSeries& series,
                 const std::vector<double>& theta) {
  return log_ratio_from_summary(model, encode(model.encoder, series), theta);
}

double backward_and_step(RatioModel& model, std::size_t head,
                         const HeadBatch& batch, nn::Adam& head_opt,
                         nn::Adam* enc_opt, Rng& rng) {
  require(head < model.heads.size(), "backward_and_step: head index");
  const std::size_t n = batch.thetas.size();
  require(n > 0 && batch.labels.size() == n, "backward_and_step: empty batch");
  int ones = 0;
  for (int y : batch.labels) ones += y;
  require(2 * ones == static_cast<int>(n),
          "backward_and_step: labels must be balanced");
  const bool recurrent = model.encoder.spec.kind == EncoderKind::Recurrent;
  if (recurrent) {
    require(batch.series.size() == n,
            "backward_and_step: recurrent training needs raw series");
    require(enc_opt != nullptr,
            "backward_and_step: recurrent training needs an encoder optimizer");
  } else {
    require(batch.summaries.size() == n,
            "backward_and_step: summary batch size mismatch");
  }

  BlockHead& h = model.heads[head];
  for (nn::Param* p : h.mlp.params()) p->zero_grad();
  if (recurrent)
    for (nn::Param* p : model.encoder.gru.params()) p->zero_grad();

  const int enc_dim = model.encoder.spec.output_dim();
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> summary;
    nn::GruTape gtape;
    if (recurrent) {
      const TimeSeries& s = *batch.series[j];
      std::vector<std::vector<double>> xs(s.values.size(),
                                          std::vector<double>(1));
      for (std::size_t i = 0; i < s.values.size(); ++i)
        xs[i][0] = s.values[i];
      summary = gru_forward(model.encoder.gru, xs, &gtape);
    } else {
      summary = batch.summaries[j];
    }
    const std::vector<double> in =
        head_input(model, head, summary, batch.thetas[j]);
    nn::MlpTape tape;
    const std::vector<double> out = mlp_forward(h.mlp, in, &tape, true, &rng);
    const double logit = out[0] + model.box.block_log_volume(h.block);
    const double y = batch.labels[j];
    // BCE with logits: softplus(l) - y l, gradient sig(l) - y.
    loss += softplus(logit) - y * logit;
    const double dlogit = (sigmoid(logit) - y) / static_cast<double>(n);
    const std::vector<double> din = mlp_backward(h.mlp, tape, {dlogit});
    if (recurrent) {
      std::vector<double> dsum(din.begin(), din.begin() + enc_dim);
      gru_backward(model.encoder.gru, gtape, dsum);
    }
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss))
    throw std::runtime_error(
        "backward_and_step: non-finite loss on head " + std::to_string(head));
  head_opt.step(h.mlp.params());
  if (recurrent) enc_opt->step(model.encoder.gru.params());
  return loss;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json param_to_json(const nn::Param& p) { return json(p.value); }

void param_from_json(const json& j, nn::Param& p) {
  const std::vector<double> v = j.get<std::vector<double>>();
  require(v.size() == p.value.size(), "checkpoint: parameter size mismatch");
  p.value = v;
}

json calibration_to_json(const CalibrationMap& m) {
  json j;
  switch (m.kind) {
    case CalibKind::Identity: j["kind"] = "identity"; break;
    case CalibKind::Platt: j["kind"] = "platt"; break;
    case CalibKind::Beta: j["kind"] = "beta"; break;
    case CalibKind::Isotonic: j["kind"] = "isotonic"; break;
  }
  j["params"] = m.params;
  j["breakpoints"] = m.breakpoints;
  j["values"] = m.values;
  return j;
}

CalibrationMap calibration_from_json(const json& j) {
  CalibrationMap m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") m.kind = CalibKind::Identity;
  else if (kind == "platt") m.kind = CalibKind::Platt;
  else if (kind == "beta") m.kind = CalibKind::Beta;
  else if (kind == "isotonic") m.kind = CalibKind::Isotonic;
  else throw std::invalid_argument("checkpoint: unknown calibration kind");
  m.params = j.at("params").get<std::vector<double>>();
  m.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  m.values = j.at("values").get<std::vector<double>>();
  return m;
}

}  // namespace

std::string model_to_json(const RatioModel& model) {
  model.validate();
  json j;
  j["version"] = model.version;
  json enc;
  enc["kind"] = model.encoder.spec.kind == EncoderKind::SummaryStats
                    ? "summary_stats"
                    : "recurrent";
  enc["lags"] = model.encoder.spec.lags;
  enc["moments"] = model.encoder.spec.moments;
  enc["hidden"] = model.encoder.spec.hidden;
  enc["layers"] = model.encoder.spec.layers;
  if (model.encoder.spec.kind == EncoderKind::Recurrent) {
    json ps = json::array();
    for (const nn::Param* p : model.encoder.gru.params())
      ps.push_back(param_to_json(*p));
    enc["weights"] = ps;
  }
  j["encoder"] = enc;

  json box;
  box["lo"] = model.box.lo;
  box["hi"] = model.box.hi;
  json blocks = json::array();
  for (const Block& b : model.box.blocks)
    blocks.push_back({{"start", b.start}, {"size", b.size}});
  box["blocks"] = blocks;
  j["box"] = box;

  json heads = json::array();
  for (const BlockHead& h : model.heads) {
    json hj;
    hj["block"] = {{"start", h.block.start}, {"size", h.block.size}};
    hj["hidden_sizes"] = h.hidden_sizes;
    hj["dropout"] = h.dropout;
    json ps = json::array();
    for (const nn::Param* p : std::as_const(h.mlp).params())
      ps.push_back(param_to_json(*p));
    hj["weights"] = ps;
    heads.push_back(hj);
  }
  j["heads"] = heads;

  json cal = json::array();
  for (const CalibrationMap& m : model.calibration)
    cal.push_back(calibration_to_json(m));
  j["calibration"] = cal;
  return j.dump(2);
}

RatioModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  RatioModel m;
  m.version = j.at("version").get<int>();
  require(m.version == 1, "checkpoint: unsupported version");

  const json& enc = j.at("encoder");
  m.encoder.spec.kind = enc.at("kind").get<std::string>() == "recurrent"
                            ? EncoderKind::Recurrent
                            : EncoderKind::SummaryStats;
  m.encoder.spec.lags = enc.at("lags").get<int>();
  m.encoder.spec.moments = enc.at("moments").get<int>();
  m.encoder.spec.hidden = enc.at("hidden").get<int>();
  m.encoder.spec.layers = enc.at("layers").get<int>();

  const json& box = j.at("box");
  m.box.lo = box.at("lo").get<std::vector<double>>();
  m.box.hi = box.at("hi").get<std::vector<double>>();
  for (const json& b : box.at("blocks"))
    m.box.blocks.push_back(
        {b.at("start").get<int>(), b.at("size").get<int>()});

  // Re-initialize structures with a throwaway rng, then overwrite weights.
  Rng scratch(0);
  if (m.encoder.spec.kind == EncoderKind::Recurrent) {
    m.encoder.gru.init(1, m.encoder.spec.hidden, m.encoder.spec.layers, "enc",
                       scratch);
    const json& ws = enc.at("weights");
    const std::vector<nn::Param*> ps = m.encoder.gru.params();
    require(ws.size() == ps.size(), "checkpoint: encoder tensor count");
    for (std::size_t i = 0; i < ps.size(); ++i)
      param_from_json(ws[i], *ps[i]);
  }

  for (const json& hj : j.at("heads")) {
    BlockHead h;
    h.block = {hj.at("block").at("start").get<int>(),
               hj.at("block").at("size").get<int>()};
    h.hidden_sizes = hj.at("hidden_sizes").get<std::vector<int>>();
    h.dropout = hj.at("dropout").get<double>();
    std::vector<int> sizes;
    sizes.push_back(m.encoder.spec.output_dim() + h.block.start +
                    h.block.size);
    sizes.insert(sizes.end(), h.hidden_sizes.begin(), h.hidden_sizes.end());
    sizes.push_back(1);
    h.mlp.init(sizes, h.dropout, "head", scratch);
    const json& ws = hj.at("weights");
    const std::vector<nn::Param*> ps = h.mlp.params();
    require(ws.size() == ps.size(), "checkpoint: head tensor count");
    for (std::size_t i = 0; i < ps.size(); ++i)
      param_from_json(ws[i], *ps[i]);
    m.heads.push_back(std::move(h));
  }

  for (const json& c : j.at("calibration"))
    m.calibration.push_back(calibration_from_json(c));
  m.validate();
  return m;
}

void save_model(const RatioModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot write " + path);
  out << model_to_json(model) << "\n";
}

RatioModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace trawlsbi
