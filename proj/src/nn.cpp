#include "trawlsbi/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace trawlsbi::nn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_fan_in(Param& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& w : p.value) w = rng.uniform(-bound, bound);
}

}  // namespace

void Linear::init(int in_dim, int out_dim, const std::string& label,
                  Rng& rng) {
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument("Linear: dimensions must be positive");
  in = in_dim;
  out = out_dim;
  w.resize(static_cast<std::size_t>(in) * out, label + ".w");
  b.resize(out, label + ".b");
  fill_fan_in(w, in, rng);
  fill_fan_in(b, in, rng);
}

std::vector<double> Linear::forward(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != in)
    throw std::invalid_argument("Linear: input size mismatch");
  std::vector<double> y(out);
  for (int o = 0; o < out; ++o) {
    double s = b.value[o];
    const double* row = &w.value[static_cast<std::size_t>(o) * in];
    for (int i = 0; i < in; ++i) s += row[i] * x[i];
    y[o] = s;
  }
  return y;
}

std::vector<double> Linear::backward(const std::vector<double>& x,
                                     const std::vector<double>& dy) {
  std::vector<double> dx(in, 0.0);
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    b.grad[o] += g;
    const std::size_t off = static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      w.grad[off + i] += g * x[i];
      dx[i] += g * w.value[off + i];
    }
  }
  return dx;
}

void Mlp::init(const std::vector<int>& layer_sizes, double dropout_rate,
               const std::string& label, Rng& rng) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("Mlp: need at least input and output sizes");
  sizes = layer_sizes;
  dropout = dropout_rate;
  layers.clear();
  layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l < layers.size(); ++l)
    layers[l].init(sizes[l], sizes[l + 1],
                   label + ".l" + std::to_string(l), rng);
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> ps;
  for (auto& l : layers) {
    ps.push_back(&l.w);
    ps.push_back(&l.b);
  }
  return ps;
}

std::vector<const Param*> Mlp::params() const {
  std::vector<const Param*> ps;
  for (const auto& l : layers) {
    ps.push_back(&l.w);
    ps.push_back(&l.b);
  }
  return ps;
}

std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& x,
                                MlpTape* tape, bool train, Rng* rng) {
  if (train && m.dropout > 0.0 && rng == nullptr)
    throw std::invalid_argument("mlp_forward: dropout training needs an rng");
  if (tape) {
    tape->pre.assign(m.layers.size(), {});
    tape->act.assign(m.layers.size() + 1, {});
    tape->masks.assign(m.layers.size(), {});
  }
  std::vector<double> h = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    if (tape) tape->act[l] = h;
    std::vector<double> y = m.layers[l].forward(h);
    if (tape) tape->pre[l] = y;
    const bool hidden = l + 1 < m.layers.size();
    if (hidden) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
      if (m.dropout > 0.0) {
        std::vector<double> mask(y.size(), 1.0);
        if (train) {
          const double keep = 1.0 - m.dropout;
          for (std::size_t i = 0; i < y.size(); ++i) {
            mask[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
            y[i] *= mask[i];
          }
        }
        if (tape) tape->masks[l] = std::move(mask);
      }
    }
    h = std::move(y);
  }
  if (tape) tape->act[m.layers.size()] = h;
  return h;
}

std::vector<double> mlp_backward(Mlp& m, const MlpTape& tape,
                                 const std::vector<double>& dy) {
  std::vector<double> g = dy;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const bool hidden = l + 1 < m.layers.size();
    if (hidden) {
      if (!tape.masks[l].empty())
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= tape.masks[l][i];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (tape.pre[l][i] <= 0.0) g[i] = 0.0;
    }
    g = m.layers[l].backward(tape.act[l], g);
  }
  return g;
}

void Gru::init(int input_dim, int hidden_dim, int layer_count,
               const std::string& label, Rng& rng) {
  if (input_dim < 1 || hidden_dim < 1 || layer_count < 1)
    throw std::invalid_argument("Gru: dimensions must be positive");
  input = input_dim;
  hidden = hidden_dim;
  layers = layer_count;
  stack.clear();
  stack.resize(layers);
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input : hidden;
    auto& s = stack[l];
    const std::string pre = label + ".g" + std::to_string(l);
    const std::size_t wi = static_cast<std::size_t>(hidden) * in;
    const std::size_t wh = static_cast<std::size_t>(hidden) * hidden;
    s.wz.resize(wi, pre + ".wz");
    s.wr.resize(wi, pre + ".wr");
    s.wn.resize(wi, pre + ".wn");
    s.uz.resize(wh, pre + ".uz");
    s.ur.resize(wh, pre + ".ur");
    s.un.resize(wh, pre + ".un");
    s.bz.resize(hidden, pre + ".bz");
    s.br.resize(hidden, pre + ".br");
    s.bn.resize(hidden, pre + ".bn");
    for (Param* p : {&s.wz, &s.wr, &s.wn}) fill_fan_in(*p, in, rng);
    for (Param* p : {&s.uz, &s.ur, &s.un, &s.bz, &s.br, &s.bn})
      fill_fan_in(*p, hidden, rng);
  }
}

std::vector<Param*> Gru::params() {
  std::vector<Param*> ps;
  for (auto& s : stack)
    for (Param* p :
         {&s.wz, &s.wr, &s.wn, &s.uz, &s.ur, &s.un, &s.bz, &s.br, &s.bn})
      ps.push_back(p);
  return ps;
}

std::vector<const Param*> Gru::params() const {
  std::vector<const Param*> ps;
  for (const auto& s : stack)
    for (const Param* p :
         {&s.wz, &s.wr, &s.wn, &s.uz, &s.ur, &s.un, &s.bz, &s.br, &s.bn})
      ps.push_back(p);
  return ps;
}

namespace {

// y = W x + U h + b for one gate, W: hidden x in, U: hidden x hidden.
std::vector<double> gate_pre(const Param& w, const Param& u, const Param& b,
                             const std::vector<double>& x,
                             const std::vector<double>& h, int hidden) {
  const int in = static_cast<int>(x.size());
  std::vector<double> y(hidden);
  for (int o = 0; o < hidden; ++o) {
    double s = b.value[o];
    const double* wr = &w.value[static_cast<std::size_t>(o) * in];
    for (int i = 0; i < in; ++i) s += wr[i] * x[i];
    const double* ur = &u.value[static_cast<std::size_t>(o) * hidden];
    for (int i = 0; i < hidden; ++i) s += ur[i] * h[i];
    y[o] = s;
  }
  return y;
}

void gate_backward(Param& w, Param& u, Param& b, const std::vector<double>& x,
                   const std::vector<double>& h,
                   const std::vector<double>& dpre, std::vector<double>& dx,
                   std::vector<double>& dh, int hidden) {
  const int in = static_cast<int>(x.size());
  for (int o = 0; o < hidden; ++o) {
    const double g = dpre[o];
    b.grad[o] += g;
    const std::size_t wo = static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      w.grad[wo + i] += g * x[i];
      dx[i] += g * w.value[wo + i];
    }
    const std::size_t uo = static_cast<std::size_t>(o) * hidden;
    for (int i = 0; i < hidden; ++i) {
      u.grad[uo + i] += g * h[i];
      dh[i] += g * u.value[uo + i];
    }
  }
}

}  // namespace

std::vector<double> gru_forward(const Gru& g,
                                const std::vector<std::vector<double>>& xs,
                                GruTape* tape) {
  if (xs.empty()) throw std::invalid_argument("gru_forward: empty sequence");
  const std::size_t steps = xs.size();
  if (tape) {
    tape->steps = steps;
    tape->x.assign(g.layers, std::vector<std::vector<double>>(steps));
    tape->h.assign(g.layers, std::vector<std::vector<double>>(steps));
    tape->z.assign(g.layers, std::vector<std::vector<double>>(steps));
    tape->r.assign(g.layers, std::vector<std::vector<double>>(steps));
    tape->n.assign(g.layers, std::vector<std::vector<double>>(steps));
  }
  std::vector<std::vector<double>> seq = xs;
  for (int l = 0; l < g.layers; ++l) {
    const auto& s = g.stack[l];
    std::vector<double> h(g.hidden, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      const std::vector<double>& x = seq[t];
      std::vector<double> z = gate_pre(s.wz, s.uz, s.bz, x, h, g.hidden);
      std::vector<double> r = gate_pre(s.wr, s.ur, s.br, x, h, g.hidden);
      for (double& v : z) v = sigmoid(v);
      for (double& v : r) v = sigmoid(v);
      std::vector<double> rh(g.hidden);
      for (int i = 0; i < g.hidden; ++i) rh[i] = r[i] * h[i];
      std::vector<double> n = gate_pre(s.wn, s.un, s.bn, x, rh, g.hidden);
      for (double& v : n) v = std::tanh(v);
      std::vector<double> hn(g.hidden);
      for (int i = 0; i < g.hidden; ++i)
        hn[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
      if (tape) {
        tape->x[l][t] = x;
        tape->h[l][t] = h;  // state entering step t
        tape->z[l][t] = z;
        tape->r[l][t] = r;
        tape->n[l][t] = n;
      }
      h = std::move(hn);
      seq[t] = h;  // becomes the input sequence of the next layer
    }
  }
  return seq.back();
}

void gru_backward(Gru& g, const GruTape& tape,
                  const std::vector<double>& dh_final) {
  const std::size_t steps = tape.steps;
  // dseq: gradient flowing into each timestep's output of the current layer.
  std::vector<std::vector<double>> dseq(steps,
                                        std::vector<double>(g.hidden, 0.0));
  dseq.back() = dh_final;
  for (int l = g.layers - 1; l >= 0; --l) {
    auto& s = g.stack[l];
    const int in = l == 0 ? g.input : g.hidden;
    std::vector<std::vector<double>> dx_seq(steps,
                                            std::vector<double>(in, 0.0));
    std::vector<double> dh(g.hidden, 0.0);  // carries across time
    for (std::size_t t = steps; t-- > 0;) {
      for (int i = 0; i < g.hidden; ++i) dh[i] += dseq[t][i];
      const auto& x = tape.x[l][t];
      const auto& h = tape.h[l][t];
      const auto& z = tape.z[l][t];
      const auto& r = tape.r[l][t];
      const auto& n = tape.n[l][t];
      std::vector<double> dz(g.hidden), dn(g.hidden), dh_prev(g.hidden);
      for (int i = 0; i < g.hidden; ++i) {
        dz[i] = dh[i] * (h[i] - n[i]) * z[i] * (1.0 - z[i]);
        dn[i] = dh[i] * (1.0 - z[i]) * (1.0 - n[i] * n[i]);
        dh_prev[i] = dh[i] * z[i];
      }
      std::vector<double> rh(g.hidden), drh(g.hidden, 0.0);
      for (int i = 0; i < g.hidden; ++i) rh[i] = r[i] * h[i];
      gate_backward(s.wn, s.un, s.bn, x, rh, dn, dx_seq[t], drh, g.hidden);
      std::vector<double> dr(g.hidden);
      for (int i = 0; i < g.hidden; ++i) {
        dr[i] = drh[i] * h[i] * r[i] * (1.0 - r[i]);
        dh_prev[i] += drh[i] * r[i];
      }
      gate_backward(s.wz, s.uz, s.bz, x, h, dz, dx_seq[t], dh_prev, g.hidden);
      gate_backward(s.wr, s.ur, s.br, x, h, dr, dx_seq[t], dh_prev, g.hidden);
      dh = std::move(dh_prev);
    }
    dseq = std::move(dx_seq);  // propagate into the layer below
  }
}

void Adam::attach(const std::vector<Param*>& ps) {
  t = 0;
  m.clear();
  v.clear();
  for (const Param* p : ps) {
    m.emplace_back(p->value.size(), 0.0);
    v.emplace_back(p->value.size(), 0.0);
  }
}

double Adam::current_lr() const {
  const double frac =
      horizon == 0
          ? 1.0
          : std::min(1.0, static_cast<double>(t) / static_cast<double>(horizon));
  return lr * (alpha + (1.0 - alpha) * 0.5 * (1.0 + std::cos(kPi * frac)));
}

void Adam::step(const std::vector<Param*>& ps) {
  if (m.size() != ps.size())
    throw std::invalid_argument("Adam: step before attach");
  const double lr_t = current_lr();
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Param& p = *ps[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      if (!std::isfinite(g))
        throw std::runtime_error("Adam: non-finite gradient in " + p.name);
      m[k][i] = beta1 * m[k][i] + (1.0 - beta1) * g;
      v[k][i] = beta2 * v[k][i] + (1.0 - beta2) * g * g;
      const double mh = m[k][i] / c1;
      const double vh = v[k][i] / c2;
      p.value[i] -= lr_t * mh / (std::sqrt(vh) + eps);
    }
  }
}

}  // namespace trawlsbi::nn
