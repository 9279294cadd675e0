#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace edgefair {

/// Small fully connected network with tanh hidden layers and a single linear
/// output (a logit). Callers that need a distribution collect one logit per
/// child value and softmax across them, which keeps the outputs normalized by
/// construction.
class Mlp {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // out x in, row major
    std::vector<double> b;  // out
  };

  Mlp() = default;

  Mlp(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int in = input_dim;
    for (std::size_t i = 0; i <= hidden.size(); ++i) {
      const int out = i < hidden.size() ? hidden[i] : 1;
      Layer layer;
      layer.in = in;
      layer.out = out;
      const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      layer.w.resize(static_cast<std::size_t>(in * out));
      for (double& x : layer.w) x = dist(rng);
      layer.b.assign(static_cast<std::size_t>(out), 0.0);
      layers_.push_back(std::move(layer));
      in = out;
    }
  }

  bool empty() const { return layers_.empty(); }
  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Per-layer post-activation values kept for backprop.
  struct Trace {
    std::vector<std::vector<double>> activations;  // input + each layer output
  };

  double logit(const std::vector<double>& input) const {
    Trace scratch;
    return logit(input, scratch);
  }

  double logit(const std::vector<double>& input, Trace& trace) const {
    trace.activations.assign(1, input);
    std::vector<double> current = input;
    std::vector<double> next;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& layer = layers_[li];
      next.assign(static_cast<std::size_t>(layer.out), 0.0);
      for (int o = 0; o < layer.out; ++o) {
        double z = layer.b[static_cast<std::size_t>(o)];
        const double* wrow = &layer.w[static_cast<std::size_t>(o * layer.in)];
        for (int i = 0; i < layer.in; ++i) {
          z += wrow[i] * current[static_cast<std::size_t>(i)];
        }
        const bool is_last = li + 1 == layers_.size();
        next[static_cast<std::size_t>(o)] = is_last ? z : std::tanh(z);
      }
      trace.activations.push_back(next);
      current.swap(next);
    }
    return current[0];
  }

  /// Accumulates dLoss/dParams into `grad` (same shape as *this) given
  /// dLoss/dLogit for the traced forward pass.
  void backprop(const Trace& trace, double d_logit, Mlp& grad) const {
    std::vector<double> delta{d_logit};
    std::vector<double> prev_delta;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const Layer& layer = layers_[li];
      Layer& glayer = grad.layers_[li];
      const auto& input = trace.activations[li];
      prev_delta.assign(static_cast<std::size_t>(layer.in), 0.0);
      for (int o = 0; o < layer.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        glayer.b[static_cast<std::size_t>(o)] += d;
        const double* wrow = &layer.w[static_cast<std::size_t>(o * layer.in)];
        double* grow = &glayer.w[static_cast<std::size_t>(o * layer.in)];
        for (int i = 0; i < layer.in; ++i) {
          grow[i] += d * input[static_cast<std::size_t>(i)];
          prev_delta[static_cast<std::size_t>(i)] += d * wrow[i];
        }
      }
      if (li > 0) {
        // Propagate through the previous layer's tanh.
        const auto& a = trace.activations[li];
        for (int i = 0; i < layer.in; ++i) {
          const double t = a[static_cast<std::size_t>(i)];
          prev_delta[static_cast<std::size_t>(i)] *= (1.0 - t * t);
        }
      }
      delta.swap(prev_delta);
    }
  }

  static Mlp zeros_like(const Mlp& other) {
    Mlp z = other;
    for (auto& layer : z.layers_) {
      std::fill(layer.w.begin(), layer.w.end(), 0.0);
      std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    return z;
  }

  void set_zero() {
    for (auto& layer : layers_) {
      std::fill(layer.w.begin(), layer.w.end(), 0.0);
      std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.w.size() + layer.b.size();
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& layer : layers_) {
      out.insert(out.end(), layer.w.begin(), layer.w.end());
      out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    return out;
  }

  void load(const std::vector<double>& params) {
    std::size_t at = 0;
    for (auto& layer : layers_) {
      for (double& x : layer.w) x = params[at++];
      for (double& x : layer.b) x = params[at++];
    }
  }

 private:
  std::vector<Layer> layers_;
};

/// Adam with the conventional defaults (step 1e-3, moment decays 0.9/0.999).
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

inline void softmax_inplace(std::vector<double>& logits) {
  double max_l = logits[0];
  for (const double l : logits) max_l = std::max(max_l, l);
  double denom = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_l);
    denom += l;
  }
  for (double& l : logits) l /= denom;
}

/// dLoss/dLogits from dLoss/dOutputs through a softmax: the usual
/// s_j * (g_j - sum_k g_k s_k).
inline void softmax_backward(const std::vector<double>& softmax_out,
                             const std::vector<double>& d_out,
                             std::vector<double>& d_logits) {
  double dot = 0.0;
  for (std::size_t i = 0; i < softmax_out.size(); ++i) {
    dot += d_out[i] * softmax_out[i];
  }
  d_logits.resize(softmax_out.size());
  for (std::size_t i = 0; i < softmax_out.size(); ++i) {
    d_logits[i] = softmax_out[i] * (d_out[i] - dot);
  }
}

}  // namespace edgefair
