#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgefair/inference.hpp"
#include "edgefair/mlp.hpp"
#include "edgefair/model.hpp"
#include "edgefair/simplex.hpp"

namespace edgefair {

enum class ModelKind { Linear, Mlp };

inline std::string to_string(ModelKind kind) {
  return kind == ModelKind::Linear ? "linear" : "mlp";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "mlp") return ModelKind::Mlp;
  throw ParseError("unknown model kind '" + s + "'");
}

struct ModelKindOptions {
  ModelKind kind = ModelKind::Linear;
  std::vector<int> hidden_sizes = {16, 16};
  double step_size = 0.0;  // 0 = kind default (1/L projected step, 1e-3 Adam)
  int iterations = 0;      // 0 = kind default (10000 PGD steps, 5000 epochs)
  std::uint64_t seed = 0;
  double tolerance = 1e-10;

  int linear_iterations() const { return iterations > 0 ? iterations : 10000; }
  int mlp_epochs() const { return iterations > 0 ? iterations : 5000; }
};

/// Per-node edge-flow tables: the joint fair-parent flow (one table indexed
/// by the fair part of the parent assignment) and one flow table per unfair
/// parent (indexed by that parent's value alone). Entries are strictly
/// positive and sum to 1 over the child values.
class FlowTables {
 public:
  FlowTables() = default;

  static FlowTables build(const CausalModel& model, const std::string& x) {
    const int node = model.index(x);
    if (model.parents(node).empty()) {
      throw RootNode("flow_tables: '" + x + "' has no parents");
    }
    FlowTables ft;
    ft.node_ = x;
    ft.card_ = model.card(node);
    ft.pa_rows_ = model.pa_row_count(node);

    std::vector<int> fair_nodes;
    std::vector<int> unfair_nodes;
    for (const int p : model.parents(node)) {
      if (model.is_sensitive(p)) {
        unfair_nodes.push_back(p);
        ft.unfair_parents_.push_back(model.variable(p).name);
      } else {
        fair_nodes.push_back(p);
        ft.fair_parents_.push_back(model.variable(p).name);
      }
    }
    for (const int p : model.parents(node)) {
      ft.parent_names_.push_back(model.variable(p).name);
      ft.parent_cards_.push_back(model.card(p));
    }

    const std::size_t card = static_cast<std::size_t>(ft.card_);
    if (!fair_nodes.empty()) {
      std::vector<int> fair_cards;
      for (const int p : fair_nodes) fair_cards.push_back(model.card(p));
      std::size_t fair_rows = 1;
      for (const int c : fair_cards) fair_rows *= static_cast<std::size_t>(c);
      ft.fair_.assign(fair_rows * card, 0.0);
      std::vector<int> values(fair_nodes.size());
      for (std::size_t row = 0; row < fair_rows; ++row) {
        detail::mixed_radix_decode(row, fair_cards, values);
        Assignment m;
        for (std::size_t i = 0; i < fair_nodes.size(); ++i) {
          m.set(model.variable(fair_nodes[i]).name, values[i]);
        }
        const auto flow = edge_flow(model, x, ft.fair_parents_, m);
        for (int v = 0; v < ft.card_; ++v) {
          ft.fair_[row * card + static_cast<std::size_t>(v)] =
              flow.probs[static_cast<std::size_t>(v)];
        }
      }
    }
    for (std::size_t k = 0; k < unfair_nodes.size(); ++k) {
      const int p = unfair_nodes[k];
      const std::string name = model.variable(p).name;
      std::vector<double> table(static_cast<std::size_t>(model.card(p)) * card,
                                0.0);
      for (int a = 0; a < model.card(p); ++a) {
        Assignment m;
        m.set(name, a);
        const auto flow = edge_flow(model, x, {name}, m);
        for (int v = 0; v < ft.card_; ++v) {
          table[static_cast<std::size_t>(a) * card +
                static_cast<std::size_t>(v)] =
              flow.probs[static_cast<std::size_t>(v)];
        }
      }
      ft.unfair_.push_back(std::move(table));
    }

    // Parent-row decoding tables.
    ft.fair_idx_of_row_.assign(ft.pa_rows_, 0);
    ft.unfair_val_of_row_.assign(unfair_nodes.size(),
                                 std::vector<int>(ft.pa_rows_, 0));
    std::vector<int> pa_values(ft.parent_cards_.size());
    for (std::size_t row = 0; row < ft.pa_rows_; ++row) {
      detail::mixed_radix_decode(row, ft.parent_cards_, pa_values);
      std::size_t fair_idx = 0;
      std::size_t ui = 0;
      for (std::size_t i = 0; i < ft.parent_names_.size(); ++i) {
        const int p = model.index(ft.parent_names_[i]);
        if (model.is_sensitive(p)) {
          ft.unfair_val_of_row_[ui][row] = pa_values[i];
          ++ui;
        } else {
          fair_idx = fair_idx * static_cast<std::size_t>(ft.parent_cards_[i]) +
                     static_cast<std::size_t>(pa_values[i]);
        }
      }
      ft.fair_idx_of_row_[row] = fair_idx;
    }
    return ft;
  }

  const std::string& node() const { return node_; }
  int node_card() const { return card_; }
  std::size_t pa_row_count() const { return pa_rows_; }
  bool has_fair_channel() const { return !fair_parents_.empty(); }
  const std::vector<std::string>& fair_parents() const { return fair_parents_; }
  const std::vector<std::string>& unfair_parents() const {
    return unfair_parents_;
  }
  int channel_count() const {
    return static_cast<int>(unfair_parents_.size()) +
           (has_fair_channel() ? 1 : 0);
  }

  double fair_flow(int x, std::size_t pa_row) const {
    return fair_[fair_idx_of_row_[pa_row] * static_cast<std::size_t>(card_) +
                 static_cast<std::size_t>(x)];
  }

  double unfair_flow(std::size_t k, int x, std::size_t pa_row) const {
    const int a = unfair_val_of_row_[k][pa_row];
    return unfair_[k][static_cast<std::size_t>(a) *
                          static_cast<std::size_t>(card_) +
                      static_cast<std::size_t>(x)];
  }

  /// Unfair flow of parent k when that parent is pinned to `value` directly
  /// (the Eq. 19 override path, independent of the pa row).
  double unfair_flow_at(std::size_t k, int x, int value) const {
    return unfair_[k][static_cast<std::size_t>(value) *
                          static_cast<std::size_t>(card_) +
                      static_cast<std::size_t>(x)];
  }

  int unfair_index(const std::string& parent) const {
    for (std::size_t k = 0; k < unfair_parents_.size(); ++k) {
      if (unfair_parents_[k] == parent) return static_cast<int>(k);
    }
    throw UnknownParent("'" + parent + "' is not an unfair parent of '" +
                        node_ + "'");
  }

  /// Channel vector in the fixed order [fair, unfair...].
  void channels(int x, std::size_t pa_row, std::vector<double>& out) const {
    out.clear();
    if (has_fair_channel()) out.push_back(fair_flow(x, pa_row));
    for (std::size_t k = 0; k < unfair_parents_.size(); ++k) {
      out.push_back(unfair_flow(k, x, pa_row));
    }
  }

  std::size_t pa_row_of(const Assignment& pa) const {
    std::vector<int> values(parent_names_.size());
    for (std::size_t i = 0; i < parent_names_.size(); ++i) {
      values[i] = pa.at(parent_names_[i]);
    }
    return detail::mixed_radix_index(values, parent_cards_);
  }

 private:
  std::string node_;
  int card_ = 0;
  std::size_t pa_rows_ = 0;
  std::vector<std::string> parent_names_;
  std::vector<int> parent_cards_;
  std::vector<std::string> fair_parents_;
  std::vector<std::string> unfair_parents_;
  std::vector<double> fair_;                       // [fairIdx * card + x]
  std::vector<std::vector<double>> unfair_;        // per parent [a * card + x]
  std::vector<std::size_t> fair_idx_of_row_;
  std::vector<std::vector<int>> unfair_val_of_row_;
};

inline FlowTables flow_tables(const CausalModel& model, const std::string& x) {
  return FlowTables::build(model, x);
}

/// A CPT approximated as f^w of the node's edge flows. Linear: one simplex
/// weight per channel. Mlp: shared trunk producing one logit per child value,
/// normalized by a softmax across the child values.
struct FittedCpt {
  std::string node;
  ModelKind kind = ModelKind::Linear;
  bool has_fair_channel = false;
  std::vector<std::string> unfair_parents;
  std::vector<double> weights;  // linear, channel order [fair?, unfair...]
  Mlp net;                      // mlp
  double fit_mse = 0.0;
  bool converged = true;
  std::uint64_t seed = 0;
};

namespace detail {

inline FittedCpt fit_linear(const CausalModel& model, const FlowTables& flows,
                            const ModelKindOptions& opts) {
  const int node = model.index(flows.node());
  const std::size_t pa_rows = flows.pa_row_count();
  const int card = flows.node_card();
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  inputs.reserve(pa_rows * static_cast<std::size_t>(card));
  std::vector<double> chan;
  for (std::size_t r = 0; r < pa_rows; ++r) {
    for (int x = 0; x < card; ++x) {
      flows.channels(x, r, chan);
      inputs.push_back(chan);
      targets.push_back(model.cpt_value(node, r, x));
    }
  }
  const auto lsq = simplex_least_squares(inputs, targets, opts.seed,
                                         opts.linear_iterations(),
                                         opts.tolerance);
  FittedCpt fit;
  fit.node = flows.node();
  fit.kind = ModelKind::Linear;
  fit.has_fair_channel = flows.has_fair_channel();
  fit.unfair_parents = flows.unfair_parents();
  fit.weights = lsq.weights;
  fit.fit_mse = lsq.mse;
  fit.converged = lsq.converged;
  fit.seed = opts.seed;
  return fit;
}

inline FittedCpt fit_mlp(const CausalModel& model, const FlowTables& flows,
                         const ModelKindOptions& opts) {
  const int node = model.index(flows.node());
  const std::size_t pa_rows = flows.pa_row_count();
  const int card = flows.node_card();
  const int dim = flows.channel_count();
  const std::size_t n_entries = pa_rows * static_cast<std::size_t>(card);

  // Inputs grouped per parent row: card consecutive channel vectors.
  std::vector<std::vector<double>> inputs(n_entries);
  std::vector<double> targets(n_entries);
  for (std::size_t r = 0; r < pa_rows; ++r) {
    for (int x = 0; x < card; ++x) {
      const std::size_t at = r * static_cast<std::size_t>(card) +
                             static_cast<std::size_t>(x);
      flows.channels(x, r, inputs[at]);
      targets[at] = model.cpt_value(node, r, x);
    }
  }

  Mlp net(dim, opts.hidden_sizes, opts.seed);
  Mlp grads = Mlp::zeros_like(net);
  Adam adam;
  if (opts.step_size > 0.0) adam.lr = opts.step_size;
  std::vector<double> params = net.flatten();
  std::vector<double> grad_vec(params.size());

  const int epochs = opts.mlp_epochs();
  std::vector<Mlp::Trace> traces(static_cast<std::size_t>(card));
  std::vector<double> outputs(static_cast<std::size_t>(card));
  std::vector<double> d_out(static_cast<std::size_t>(card));
  std::vector<double> d_logits;

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = params;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    net.load(params);
    grads.set_zero();
    double loss = 0.0;
    for (std::size_t r = 0; r < pa_rows; ++r) {
      for (int x = 0; x < card; ++x) {
        const std::size_t at = r * static_cast<std::size_t>(card) +
                               static_cast<std::size_t>(x);
        outputs[static_cast<std::size_t>(x)] =
            net.logit(inputs[at], traces[static_cast<std::size_t>(x)]);
      }
      softmax_inplace(outputs);
      for (int x = 0; x < card; ++x) {
        const std::size_t at = r * static_cast<std::size_t>(card) +
                               static_cast<std::size_t>(x);
        const double diff = outputs[static_cast<std::size_t>(x)] - targets[at];
        loss += diff * diff;
        d_out[static_cast<std::size_t>(x)] =
            2.0 * diff / static_cast<double>(n_entries);
      }
      softmax_backward(outputs, d_out, d_logits);
      for (int x = 0; x < card; ++x) {
        net.backprop(traces[static_cast<std::size_t>(x)],
                     d_logits[static_cast<std::size_t>(x)], grads);
      }
    }
    loss /= static_cast<double>(n_entries);
    if (loss < best_loss) {
      best_loss = loss;
      best_params = params;
      best_epoch = epoch;
    }
    const Mlp& g = grads;
    std::size_t at = 0;
    for (const auto& layer : g.layers()) {
      for (const double w : layer.w) grad_vec[at++] = w;
      for (const double b : layer.b) grad_vec[at++] = b;
    }
    adam.step(params, grad_vec);
  }

  net.load(best_params);
  FittedCpt fit;
  fit.node = flows.node();
  fit.kind = ModelKind::Mlp;
  fit.has_fair_channel = flows.has_fair_channel();
  fit.unfair_parents = flows.unfair_parents();
  fit.net = net;
  fit.fit_mse = best_loss;
  // Plateau heuristic: no improvement over the trailing 50 epochs.
  fit.converged = best_loss < 1e-10 || (epochs - best_epoch) > 50;
  fit.seed = opts.seed;
  return fit;
}

}  // namespace detail

inline FittedCpt fit_cpt(const CausalModel& model, const FlowTables& flows,
                         const ModelKindOptions& opts = {}) {
  return opts.kind == ModelKind::Linear ? detail::fit_linear(model, flows, opts)
                                        : detail::fit_mlp(model, flows, opts);
}

inline FittedCpt fit_cpt(const CausalModel& model, const std::string& x,
                         const ModelKindOptions& opts = {}) {
  const auto flows = flow_tables(model, x);
  return fit_cpt(model, flows, opts);
}

/// Evaluates f^w at (x, pa row) with each parent in `zeroed` contributing a
/// literal 0 flow input. For the mlp the zeroing is applied to the inputs of
/// every child value before the softmax head.
inline double predict(const FittedCpt& fitted, const FlowTables& flows, int x,
                      std::size_t pa_row,
                      const std::set<std::string>& zeroed = {}) {
  std::vector<bool> zero_channel(fitted.unfair_parents.size(), false);
  for (const auto& name : zeroed) {
    zero_channel[static_cast<std::size_t>(flows.unfair_index(name))] = true;
  }
  const std::size_t offset = fitted.has_fair_channel ? 1 : 0;
  std::vector<double> chan;
  if (fitted.kind == ModelKind::Linear) {
    flows.channels(x, pa_row, chan);
    double out = 0.0;
    for (std::size_t c = 0; c < chan.size(); ++c) {
      if (c >= offset && zero_channel[c - offset]) continue;
      out += fitted.weights[c] * chan[c];
    }
    return out;
  }
  const int card = flows.node_card();
  std::vector<double> logits(static_cast<std::size_t>(card));
  for (int v = 0; v < card; ++v) {
    flows.channels(v, pa_row, chan);
    for (std::size_t c = offset; c < chan.size(); ++c) {
      if (zero_channel[c - offset]) chan[c] = 0.0;
    }
    logits[static_cast<std::size_t>(v)] = fitted.net.logit(chan);
  }
  softmax_inplace(logits);
  return logits[static_cast<std::size_t>(x)];
}

inline double predict(const FittedCpt& fitted, const FlowTables& flows, int x,
                      const Assignment& pa,
                      const std::set<std::string>& zeroed = {}) {
  return predict(fitted, flows, x, flows.pa_row_of(pa), zeroed);
}

inline nlohmann::json fitted_to_json(const FittedCpt& fit) {
  nlohmann::json j;
  j["node"] = fit.node;
  j["kind"] = to_string(fit.kind);
  j["seed"] = fit.seed;
  j["fitMse"] = fit.fit_mse;
  j["converged"] = fit.converged;
  j["hasFairChannel"] = fit.has_fair_channel;
  j["unfairParents"] = fit.unfair_parents;
  if (fit.kind == ModelKind::Linear) {
    j["weights"] = fit.weights;
  } else {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : fit.net.layers()) {
      layers.push_back({{"in", layer.in},
                        {"out", layer.out},
                        {"w", layer.w},
                        {"b", layer.b}});
    }
    j["layers"] = layers;
  }
  return j;
}

inline FittedCpt fitted_from_json(const nlohmann::json& j) {
  FittedCpt fit;
  fit.node = j.at("node").get<std::string>();
  fit.kind = model_kind_from_string(j.at("kind").get<std::string>());
  fit.seed = j.at("seed").get<std::uint64_t>();
  fit.fit_mse = j.at("fitMse").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.has_fair_channel = j.at("hasFairChannel").get<bool>();
  fit.unfair_parents = j.at("unfairParents").get<std::vector<std::string>>();
  if (fit.kind == ModelKind::Linear) {
    fit.weights = j.at("weights").get<std::vector<double>>();
  } else {
    std::vector<Mlp::Layer> layers;
    for (const auto& lj : j.at("layers")) {
      Mlp::Layer layer;
      layer.in = lj.at("in").get<int>();
      layer.out = lj.at("out").get<int>();
      layer.w = lj.at("w").get<std::vector<double>>();
      layer.b = lj.at("b").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    fit.net.layers() = std::move(layers);
  }
  return fit;
}

}  // namespace edgefair
