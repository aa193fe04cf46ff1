#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trawlsbi/rng.hpp"

namespace trawlsbi::nn {

// A flat parameter tensor with its gradient accumulator.
struct Param {
  std::vector<double> value;
  std::vector<double> grad;
  std::string name;

  void resize(std::size_t n, const std::string& label) {
    value.assign(n, 0.0);
    grad.assign(n, 0.0);
    name = label;
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Fully connected layer, weights stored row-major (out x in).
struct Linear {
  int in = 0, out = 0;
  Param w, b;

  void init(int in_dim, int out_dim, const std::string& label, Rng& rng);
  std::vector<double> forward(const std::vector<double>& x) const;
  // Accumulates parameter gradients; returns gradient wrt the input.
  std::vector<double> backward(const std::vector<double>& x,
                               const std::vector<double>& dy);
};

// ReLU MLP with optional dropout on hidden activations (training only).
// Layer sizes include input and output: {in, h1, ..., out}.
struct Mlp {
  std::vector<int> sizes;
  double dropout = 0.0;
  std::vector<Linear> layers;

  void init(const std::vector<int>& layer_sizes, double dropout_rate,
            const std::string& label, Rng& rng);
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
};

// Per-forward scratch kept by the caller so concurrent evaluation of a
// shared const Mlp stays safe.
struct MlpTape {
  std::vector<std::vector<double>> pre;    // pre-activation per layer
  std::vector<std::vector<double>> act;    // post-activation (input of layer)
  std::vector<std::vector<double>> masks;  // dropout keep masks
};

std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& x,
                                MlpTape* tape = nullptr, bool train = false,
                                Rng* rng = nullptr);
// Requires a tape from a training-mode forward; accumulates parameter
// gradients and returns the gradient wrt the input.
std::vector<double> mlp_backward(Mlp& m, const MlpTape& tape,
                                 const std::vector<double>& dy);

// Gated recurrent unit stack; the encoder output is the final hidden state
// of the top layer. Gate convention: z = sig(Wz x + Uz h + bz),
// r = sig(Wr x + Ur h + br), n = tanh(Wn x + Un (r*h) + bn),
// h' = (1 - z)*n + z*h.
struct Gru {
  int input = 0, hidden = 0, layers = 1;
  struct Layer {
    Param wz, wr, wn;  // hidden x in
    Param uz, ur, un;  // hidden x hidden
    Param bz, br, bn;
  };
  std::vector<Layer> stack;

  void init(int input_dim, int hidden_dim, int layer_count,
            const std::string& label, Rng& rng);
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
};

struct GruTape {
  // [layer][time] caches for backpropagation through time.
  std::vector<std::vector<std::vector<double>>> x, h, z, r, n;
  std::size_t steps = 0;
};

std::vector<double> gru_forward(const Gru& g,
                                const std::vector<std::vector<double>>& xs,
                                GruTape* tape = nullptr);
// Full BPTT from the gradient of the final top-layer hidden state.
void gru_backward(Gru& g, const GruTape& tape,
                  const std::vector<double>& dh_final);

// Adam with cosine learning-rate decay over a fixed horizon:
// lr_t = lr * (alpha + (1 - alpha) * 0.5 * (1 + cos(pi * t / horizon))).
struct Adam {
  double lr = 5e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t horizon = 1;  // decay steps
  double alpha = 0.0;       // final lr fraction
  std::size_t t = 0;
  std::vector<std::vector<double>> m, v;

  void attach(const std::vector<Param*>& ps);
  double current_lr() const;
  void step(const std::vector<Param*>& ps);
};

}  // namespace trawlsbi::nn
