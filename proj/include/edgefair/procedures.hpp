#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "edgefair/metrics.hpp"
#include "edgefair/model.hpp"

namespace edgefair {

/// Flow tables plus fitted f^w for every non-root node.
struct Decomposition {
  std::map<std::string, FlowTables> flows;
  std::map<std::string, FittedCpt> fitted;
};

inline Decomposition decompose_and_fit(const CausalModel& model,
                                       const ModelKindOptions& opts = {}) {
  Decomposition dec;
  for (int i = 0; i < model.num_variables(); ++i) {
    if (model.parents(i).empty()) continue;
    const std::string& name = model.variable(i).name;
    ModelKindOptions node_opts = opts;
    node_opts.seed = opts.seed + static_cast<std::uint64_t>(i) * 9973u;
    auto flows = flow_tables(model, name);
    dec.fitted.emplace(name, fit_cpt(model, flows, node_opts));
    dec.flows.emplace(name, std::move(flows));
  }
  return dec;
}

struct PriorityRow {
  EdgeId edge;
  double mu = 0.0;
  double potential = 0.0;
  double priority = 0.0;
};

struct PriorityList {
  std::vector<PriorityRow> rows;  // sorted by priority descending
  double w_u = 0.5;
  double w_p = 0.5;
};

/// Alg. 2: fit every non-root node, compute mu and the potential per unfair
/// edge, rank by w_u * mu + w_p * potential (ties broken by edge name).
inline PriorityList compute_priority(const CausalModel& model,
                                     const Assignment& s, const Assignment& y,
                                     double w_u, double w_p,
                                     const ModelKindOptions& opts = {}) {
  if (w_u < 0.0 || w_p < 0.0) {
    throw DomainMismatch("priority weights must be nonnegative");
  }
  const auto dec = decompose_and_fit(model, opts);
  const auto mu = edge_unfairness_all(model, dec.fitted, dec.flows);
  const UpperBoundEvaluator eval(model, dec.flows, s, y);
  const double c_upper = eval.evaluate(mu);

  PriorityList list;
  list.w_u = w_u;
  list.w_p = w_p;
  for (const auto& [e, mu_e] : mu) {
    UnfairnessVector bumped = mu;
    bumped[e] = mu_e + 1.0;
    const double sens = eval.evaluate(bumped) - c_upper;
    const double pot = c_upper <= kZeroUpperTolerance ? -std::abs(sens) : sens;
    list.rows.push_back({e, mu_e, pot, w_u * mu_e + w_p * pot});
  }
  std::sort(list.rows.begin(), list.rows.end(),
            [](const PriorityRow& a, const PriorityRow& b) {
              if (a.priority != b.priority) return a.priority > b.priority;
              return a.edge < b.edge;
            });
  return list;
}

struct RemovalOptions {
  // Removal defaults to the mlp head: with the linear model a node whose
  // parents are all unfair has its unfair weights pinned to the simplex
  // (they must sum to 1), leaving no room to reduce its edge unfairness.
  ModelKindOptions fit{.kind = ModelKind::Mlp};
  int max_iterations = 400;
  double tolerance = 1e-8;
  double unfair_weight = 1.0;   // Alg. 3 weighs the two terms 1:1
  double utility_weight = 1.0;
};

struct RemovalReport {
  CausalModel new_model;
  double sum_mu_before = 0.0;
  double sum_mu_after = 0.0;
  double utility_mse = 0.0;  // sum over joint states of (P - P_new)^2
  std::vector<double> objective_trace;
  bool converged = true;
};

namespace detail {

/// Joint optimization state for Alg. 3. Flows, targets and the expectation
/// weights are computed once from the original model and held fixed; only
/// the f^w parameters move.
class RemovalProblem {
 private:
  struct NodeWork {
    int node = 0;
    int card = 0;
    std::size_t pa_rows = 0;
    FlowTables flows;
    std::vector<double> targets;
    std::vector<double> weight;
    std::vector<std::vector<double>> chan;
    std::size_t fair_offset = 0;
    int n_unfair = 0;
    std::vector<std::vector<double>> flow_k;
    std::vector<double> w;  // linear
    Mlp net;                // mlp
    std::vector<double> f;
    std::vector<std::vector<double>> f_zero;
    std::vector<double> df;
    std::vector<std::vector<double>> df_zero;
  };

  struct StateRow {
    double p = 0.0;
    double root_prod = 1.0;
    std::vector<std::size_t> entry;
  };

 public:
  RemovalProblem(const CausalModel& model, const RemovalOptions& opts)
      : model_(model), opts_(opts) {
    for (int i = 0; i < model.num_variables(); ++i) {
      if (model.parents(i).empty()) continue;
      NodeWork work;
      work.node = i;
      work.card = model.card(i);
      work.pa_rows = model.pa_row_count(i);
      work.flows = flow_tables(model, model.variable(i).name);
      const std::size_t entries =
          work.pa_rows * static_cast<std::size_t>(work.card);
      work.targets.resize(entries);
      for (std::size_t r = 0; r < work.pa_rows; ++r) {
        for (int x = 0; x < work.card; ++x) {
          work.targets[r * static_cast<std::size_t>(work.card) +
                       static_cast<std::size_t>(x)] =
              model.cpt_value(i, r, x);
        }
      }
      work.weight = node_joint_table(model, i);
      work.chan.resize(entries);
      for (std::size_t r = 0; r < work.pa_rows; ++r) {
        for (int x = 0; x < work.card; ++x) {
          work.flows.channels(x, r,
                              work.chan[r * static_cast<std::size_t>(work.card) +
                                        static_cast<std::size_t>(x)]);
        }
      }
      work.n_unfair = static_cast<int>(work.flows.unfair_parents().size());
      work.fair_offset = work.flows.has_fair_channel() ? 1 : 0;
      work.flow_k.assign(static_cast<std::size_t>(work.n_unfair),
                         std::vector<double>(entries));
      for (int k = 0; k < work.n_unfair; ++k) {
        for (std::size_t r = 0; r < work.pa_rows; ++r) {
          for (int x = 0; x < work.card; ++x) {
            work.flow_k[static_cast<std::size_t>(k)]
                       [r * static_cast<std::size_t>(work.card) +
                        static_cast<std::size_t>(x)] =
                work.flows.unfair_flow(static_cast<std::size_t>(k), x, r);
          }
        }
      }
      work.f.assign(entries, 0.0);
      work.f_zero.assign(static_cast<std::size_t>(work.n_unfair),
                         std::vector<double>(entries, 0.0));
      nodes_.push_back(std::move(work));
    }

    // Initialize from the per-node least-squares fit (Alg. 1).
    for (auto& work : nodes_) {
      ModelKindOptions node_opts = opts.fit;
      node_opts.seed =
          opts.fit.seed + static_cast<std::uint64_t>(work.node) * 9973u;
      const auto fit = fit_cpt(model, work.flows, node_opts);
      if (fit.kind == ModelKind::Linear) {
        work.w = fit.weights;
      } else {
        work.net = fit.net;
      }
    }

    // Joint-state table for the data-utility term. Root factors never move.
    std::vector<int> state(static_cast<std::size_t>(model.num_variables()),
                           -1);
    for_each_completion(model, state, [&](const std::vector<int>& full) {
      StateRow row;
      row.p = joint_dense(model, full);
      row.root_prod = 1.0;
      for (int v = 0; v < model.num_variables(); ++v) {
        if (model.parents(v).empty()) {
          row.root_prod *= model.cpt_value(
              v, 0, full[static_cast<std::size_t>(v)]);
        }
      }
      row.entry.reserve(nodes_.size());
      for (const auto& work : nodes_) {
        row.entry.push_back(
            model.pa_row(work.node, full) *
                static_cast<std::size_t>(work.card) +
            static_cast<std::size_t>(
                full[static_cast<std::size_t>(work.node)]));
      }
      states_.push_back(std::move(row));
    });
  }

  bool linear() const { return opts_.fit.kind == ModelKind::Linear; }

  std::vector<double> pack() const {
    std::vector<double> params;
    for (const auto& work : nodes_) {
      if (linear()) {
        params.insert(params.end(), work.w.begin(), work.w.end());
      } else {
        const auto p = work.net.flatten();
        params.insert(params.end(), p.begin(), p.end());
      }
    }
    return params;
  }

  void unpack(const std::vector<double>& params) {
    std::size_t at = 0;
    for (auto& work : nodes_) {
      if (linear()) {
        for (double& w : work.w) w = params[at++];
      } else {
        std::vector<double> p(params.begin() + static_cast<std::ptrdiff_t>(at),
                              params.begin() +
                                  static_cast<std::ptrdiff_t>(
                                      at + work.net.param_count()));
        work.net.load(p);
        at += work.net.param_count();
      }
    }
  }

  /// Projects each node's weight block back to its simplex (linear kind).
  void project(std::vector<double>& params) const {
    if (!linear()) return;
    std::size_t at = 0;
    for (const auto& work : nodes_) {
      const std::size_t dim = work.w.size();
      std::vector<double> block(params.begin() + static_cast<std::ptrdiff_t>(at),
                                params.begin() +
                                    static_cast<std::ptrdiff_t>(at + dim));
      block = project_to_simplex(std::move(block));
      std::copy(block.begin(), block.end(),
                params.begin() + static_cast<std::ptrdiff_t>(at));
      at += dim;
    }
  }

  /// Objective at the currently unpacked parameters; refreshes f tables.
  double objective() {
    forward();
    return opts_.unfair_weight * mu_sum() + opts_.utility_weight * utility();
  }

  double mu_sum() const {
    double total = 0.0;
    for (const auto& work : nodes_) {
      for (int k = 0; k < work.n_unfair; ++k) total += mu_edge(work, k);
    }
    return total;
  }

  double mu_edge(const NodeWork& work, int k) const {
    const auto& fz = work.f_zero[static_cast<std::size_t>(k)];
    const auto& fk = work.flow_k[static_cast<std::size_t>(k)];
    double mu = 0.0;
    for (std::size_t e = 0; e < work.f.size(); ++e) {
      if (work.weight[e] == 0.0) continue;
      mu += work.weight[e] * std::abs(work.f[e] - fz[e]) / fk[e];
    }
    return mu;
  }

  double utility() const {
    double total = 0.0;
    for (const auto& row : states_) {
      double prod = row.root_prod;
      for (std::size_t t = 0; t < nodes_.size(); ++t) {
        prod *= nodes_[t].f[row.entry[t]];
      }
      total += (row.p - prod) * (row.p - prod);
    }
    return total;
  }

  /// Gradient of the objective at the currently unpacked parameters.
  std::vector<double> gradient() {
    forward();
    // dObjective/df per node entry, split into the base pass and each
    // zeroed pass.
    for (auto& work : nodes_) {
      work.df.assign(work.f.size(), 0.0);
      work.df_zero.assign(static_cast<std::size_t>(work.n_unfair),
                          std::vector<double>(work.f.size(), 0.0));
      for (int k = 0; k < work.n_unfair; ++k) {
        const auto& fz = work.f_zero[static_cast<std::size_t>(k)];
        const auto& fk = work.flow_k[static_cast<std::size_t>(k)];
        for (std::size_t e = 0; e < work.f.size(); ++e) {
          if (work.weight[e] == 0.0) continue;
          const double diff = work.f[e] - fz[e];
          const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          const double coef =
              opts_.unfair_weight * work.weight[e] * sign / fk[e];
          work.df[e] += coef;
          work.df_zero[static_cast<std::size_t>(k)][e] -= coef;
        }
      }
    }
    for (const auto& row : states_) {
      double prod = row.root_prod;
      for (std::size_t t = 0; t < nodes_.size(); ++t) {
        prod *= nodes_[t].f[row.entry[t]];
      }
      const double outer = 2.0 * (prod - row.p) * opts_.utility_weight;
      if (outer == 0.0) continue;
      for (std::size_t t = 0; t < nodes_.size(); ++t) {
        const double f_t = nodes_[t].f[row.entry[t]];
        double rest;
        if (f_t != 0.0) {
          rest = prod / f_t;
        } else {
          rest = row.root_prod;
          for (std::size_t u = 0; u < nodes_.size(); ++u) {
            if (u != t) rest *= nodes_[u].f[row.entry[u]];
          }
        }
        nodes_[t].df[row.entry[t]] += outer * rest;
      }
    }

    std::vector<double> grad;
    for (auto& work : nodes_) {
      if (linear()) {
        append_linear_gradient(work, grad);
      } else {
        append_mlp_gradient(work, grad);
      }
    }
    return grad;
  }

  double sum_mu_now() {
    forward();
    return mu_sum();
  }

  double utility_now() {
    forward();
    return utility();
  }

  /// New CPT tables at the current parameters (rows are softmax / convex
  /// combinations of flows, so they are normalized by construction).
  std::vector<Cpt> rebuild_cpts() {
    forward();
    std::vector<Cpt> cpts;
    for (int i = 0; i < model_.num_variables(); ++i) {
      Cpt cpt = model_.cpt(i);
      const NodeWork* work = nullptr;
      std::size_t t = 0;
      for (; t < nodes_.size(); ++t) {
        if (nodes_[t].node == i) {
          work = &nodes_[t];
          break;
        }
      }
      if (work != nullptr) {
        for (std::size_t r = 0; r < work->pa_rows; ++r) {
          for (int x = 0; x < work->card; ++x) {
            cpt.table[r][static_cast<std::size_t>(x)] =
                work->f[r * static_cast<std::size_t>(work->card) +
                        static_cast<std::size_t>(x)];
          }
        }
      }
      cpts.push_back(std::move(cpt));
    }
    return cpts;
  }

 private:
  void forward() {
    for (auto& work : nodes_) {
      if (linear()) {
        forward_linear(work);
      } else {
        forward_mlp(work);
      }
    }
  }

  void forward_linear(NodeWork& work) {
    for (std::size_t e = 0; e < work.f.size(); ++e) {
      double out = 0.0;
      for (std::size_t c = 0; c < work.w.size(); ++c) {
        out += work.w[c] * work.chan[e][c];
      }
      work.f[e] = out;
    }
    for (int k = 0; k < work.n_unfair; ++k) {
      auto& fz = work.f_zero[static_cast<std::size_t>(k)];
      const std::size_t kc = work.fair_offset + static_cast<std::size_t>(k);
      for (std::size_t e = 0; e < work.f.size(); ++e) {
        fz[e] = work.f[e] - work.w[kc] * work.chan[e][kc];
      }
    }
  }

  void forward_mlp(NodeWork& work) {
    std::vector<double> logits(static_cast<std::size_t>(work.card));
    std::vector<double> input;
    for (std::size_t r = 0; r < work.pa_rows; ++r) {
      for (int x = 0; x < work.card; ++x) {
        const std::size_t e = r * static_cast<std::size_t>(work.card) +
                              static_cast<std::size_t>(x);
        logits[static_cast<std::size_t>(x)] = work.net.logit(work.chan[e]);
      }
      softmax_inplace(logits);
      for (int x = 0; x < work.card; ++x) {
        work.f[r * static_cast<std::size_t>(work.card) +
               static_cast<std::size_t>(x)] =
            logits[static_cast<std::size_t>(x)];
      }
      for (int k = 0; k < work.n_unfair; ++k) {
        const std::size_t kc = work.fair_offset + static_cast<std::size_t>(k);
        for (int x = 0; x < work.card; ++x) {
          const std::size_t e = r * static_cast<std::size_t>(work.card) +
                                static_cast<std::size_t>(x);
          input = work.chan[e];
          input[kc] = 0.0;
          logits[static_cast<std::size_t>(x)] = work.net.logit(input);
        }
        softmax_inplace(logits);
        for (int x = 0; x < work.card; ++x) {
          work.f_zero[static_cast<std::size_t>(k)]
                     [r * static_cast<std::size_t>(work.card) +
                      static_cast<std::size_t>(x)] =
              logits[static_cast<std::size_t>(x)];
        }
      }
    }
  }

  void append_linear_gradient(const NodeWork& work,
                              std::vector<double>& grad) const {
    std::vector<double> g(work.w.size(), 0.0);
    // Base pass: df/dw_c = chan_c. Zeroed pass k: df_zero/dw_c = chan_c for
    // c != k's channel, 0 for the zeroed channel itself.
    for (std::size_t e = 0; e < work.f.size(); ++e) {
      const double d = work.df[e];
      if (d != 0.0) {
        for (std::size_t c = 0; c < work.w.size(); ++c) {
          g[c] += d * work.chan[e][c];
        }
      }
      for (int k = 0; k < work.n_unfair; ++k) {
        const double dz = work.df_zero[static_cast<std::size_t>(k)][e];
        if (dz == 0.0) continue;
        const std::size_t kc = work.fair_offset + static_cast<std::size_t>(k);
        for (std::size_t c = 0; c < work.w.size(); ++c) {
          if (c == kc) continue;
          g[c] += dz * work.chan[e][c];
        }
      }
    }
    grad.insert(grad.end(), g.begin(), g.end());
  }

  void append_mlp_gradient(NodeWork& work, std::vector<double>& grad) const {
    Mlp grads = Mlp::zeros_like(work.net);
    std::vector<Mlp::Trace> traces(static_cast<std::size_t>(work.card));
    std::vector<double> outputs(static_cast<std::size_t>(work.card));
    std::vector<double> d_out(static_cast<std::size_t>(work.card));
    std::vector<double> d_logits;
    std::vector<double> input;

    for (std::size_t r = 0; r < work.pa_rows; ++r) {
      // Base pass.
      for (int x = 0; x < work.card; ++x) {
        const std::size_t e = r * static_cast<std::size_t>(work.card) +
                              static_cast<std::size_t>(x);
        outputs[static_cast<std::size_t>(x)] =
            work.net.logit(work.chan[e], traces[static_cast<std::size_t>(x)]);
        d_out[static_cast<std::size_t>(x)] = work.df[e];
      }
      softmax_inplace(outputs);
      softmax_backward(outputs, d_out, d_logits);
      for (int x = 0; x < work.card; ++x) {
        work.net.backprop(traces[static_cast<std::size_t>(x)],
                          d_logits[static_cast<std::size_t>(x)], grads);
      }
      // Zeroed passes.
      for (int k = 0; k < work.n_unfair; ++k) {
        const std::size_t kc = work.fair_offset + static_cast<std::size_t>(k);
        bool any = false;
        for (int x = 0; x < work.card; ++x) {
          const std::size_t e = r * static_cast<std::size_t>(work.card) +
                                static_cast<std::size_t>(x);
          if (work.df_zero[static_cast<std::size_t>(k)][e] != 0.0) any = true;
        }
        if (!any) continue;
        for (int x = 0; x < work.card; ++x) {
          const std::size_t e = r * static_cast<std::size_t>(work.card) +
                                static_cast<std::size_t>(x);
          input = work.chan[e];
          input[kc] = 0.0;
          outputs[static_cast<std::size_t>(x)] =
              work.net.logit(input, traces[static_cast<std::size_t>(x)]);
          d_out[static_cast<std::size_t>(x)] =
              work.df_zero[static_cast<std::size_t>(k)][e];
        }
        softmax_inplace(outputs);
        softmax_backward(outputs, d_out, d_logits);
        for (int x = 0; x < work.card; ++x) {
          work.net.backprop(traces[static_cast<std::size_t>(x)],
                            d_logits[static_cast<std::size_t>(x)], grads);
        }
      }
    }
    const auto g = grads.flatten();
    grad.insert(grad.end(), g.begin(), g.end());
  }

  const CausalModel& model_;
  RemovalOptions opts_;
  std::vector<NodeWork> nodes_;
  std::vector<StateRow> states_;
};

}  // namespace detail

/// Alg. 3: jointly re-optimizes all f^w weights to minimize total edge
/// unfairness plus the data-utility MSE, then regenerates the CPTs from
/// f^{w*}. Projected gradient for the linear kind, plain gradient on the
/// softmax-reparametrized weights for the mlp kind; backtracking line search
/// keeps the accepted objective non-increasing.
inline RemovalReport remove_discrimination(const CausalModel& model,
                                           const RemovalOptions& opts = {}) {
  bool has_unfair = false;
  for (int i = 0; i < model.num_variables(); ++i) {
    if (model.is_sensitive(i) && !model.children(i).empty()) has_unfair = true;
  }
  if (!has_unfair) {
    throw NotUnfairEdge("remove_discrimination: model has no unfair edge");
  }

  detail::RemovalProblem problem(model, opts);
  std::vector<double> params = problem.pack();
  problem.unpack(params);

  RemovalReport report{model};
  report.sum_mu_before = problem.sum_mu_now();

  double objective = problem.objective();
  report.objective_trace.push_back(objective);
  double step = 1.0;
  bool stalled = false;
  int iterations = 0;
  for (; iterations < opts.max_iterations; ++iterations) {
    const auto grad = problem.gradient();
    bool accepted = false;
    std::vector<double> candidate;
    double candidate_objective = 0.0;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = params;
      for (std::size_t i = 0; i < params.size(); ++i) {
        candidate[i] -= step * grad[i];
      }
      problem.project(candidate);
      problem.unpack(candidate);
      candidate_objective = problem.objective();
      if (candidate_objective < objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
      if (step < 1e-16) break;
    }
    if (!accepted) {
      stalled = true;  // no descent direction at line-search resolution
      problem.unpack(params);
      break;
    }
    const double improvement = objective - candidate_objective;
    params.swap(candidate);
    objective = candidate_objective;
    report.objective_trace.push_back(objective);
    step *= 2.0;
    if (improvement <= opts.tolerance * std::max(1.0, std::abs(objective))) {
      stalled = true;
      break;
    }
  }
  problem.unpack(params);
  report.converged = stalled || iterations < opts.max_iterations;

  report.sum_mu_after = problem.sum_mu_now();
  report.utility_mse = problem.utility_now();
  report.new_model =
      CausalModel::make(
          [&] {
            std::vector<Variable> vars;
            for (int i = 0; i < model.num_variables(); ++i) {
              vars.push_back(model.variable(i));
            }
            return vars;
          }(),
          model.edges(), problem.rebuild_cpts(), model.sensitive_names());
  return report;
}

}  // namespace edgefair
