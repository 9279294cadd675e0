#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "edgefair/model.hpp"

namespace edgefair {

struct InterventionSpec {
  Assignment forced;  // variables pinned by do()
};

/// Probability table over an ordered variable list, mixed-radix indexed with
/// the first variable as the most significant digit.
struct DistributionTable {
  std::vector<std::string> over;
  std::vector<double> probs;
};

namespace detail {

inline double joint_dense(const CausalModel& model,
                          const std::vector<int>& full) {
  double p = 1.0;
  for (int v = 0; v < model.num_variables(); ++v) {
    p *= model.cpt_value(v, model.pa_row(v, full),
                         full[static_cast<std::size_t>(v)]);
    if (p == 0.0) return 0.0;
  }
  return p;
}

/// Enumerates all completions of `state` (unbound entries are -1) in
/// topological mixed-radix order and invokes fn(state) for each. The state
/// buffer is restored afterwards. Sums over completions are order
/// independent; the fixed order only pins iteration determinism.
template <class F>
inline void for_each_completion(const CausalModel& model,
                                std::vector<int>& state, F&& fn) {
  std::vector<int> unbound;
  for (const int v : model.topological_order()) {
    if (state[static_cast<std::size_t>(v)] < 0) unbound.push_back(v);
  }
  if (unbound.empty()) {
    fn(const_cast<const std::vector<int>&>(state));
    return;
  }
  std::size_t total = 1;
  for (const int v : unbound) total *= static_cast<std::size_t>(model.card(v));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = unbound.size(); i-- > 0;) {
      const int v = unbound[i];
      state[static_cast<std::size_t>(v)] =
          static_cast<int>(rem % static_cast<std::size_t>(model.card(v)));
      rem /= static_cast<std::size_t>(model.card(v));
    }
    fn(const_cast<const std::vector<int>&>(state));
  }
  for (const int v : unbound) state[static_cast<std::size_t>(v)] = -1;
}

/// Truncated factorization: completions of `state` are enumerated over the
/// unbound variables, the CPT factors of do()-nodes are dropped, and all
/// remaining factors see the pinned do() values through the dense state.
inline double truncated_sum(const CausalModel& model, std::vector<int>& state,
                            const std::vector<bool>& intervened) {
  double total = 0.0;
  for_each_completion(model, state, [&](const std::vector<int>& full) {
    double p = 1.0;
    for (int v = 0; v < model.num_variables() && p != 0.0; ++v) {
      if (intervened[static_cast<std::size_t>(v)]) continue;
      p *= model.cpt_value(v, model.pa_row(v, full),
                           full[static_cast<std::size_t>(v)]);
    }
    total += p;
  });
  return total;
}

/// Interventional joint table over `targets` under do(state's bound,
/// intervened entries). `state` must bind exactly the intervened variables.
inline std::vector<double> interventional_table(
    const CausalModel& model, std::vector<int>& state,
    const std::vector<bool>& intervened, const std::vector<int>& targets) {
  std::size_t rows = 1;
  for (const int t : targets) rows *= static_cast<std::size_t>(model.card(t));
  std::vector<double> table(rows, 0.0);
  std::vector<int> values(targets.size());
  for_each_completion(model, state, [&](const std::vector<int>& full) {
    double p = 1.0;
    for (int v = 0; v < model.num_variables() && p != 0.0; ++v) {
      if (intervened[static_cast<std::size_t>(v)]) continue;
      p *= model.cpt_value(v, model.pa_row(v, full),
                           full[static_cast<std::size_t>(v)]);
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      idx = idx * static_cast<std::size_t>(model.card(targets[i])) +
            static_cast<std::size_t>(
                full[static_cast<std::size_t>(targets[i])]);
    }
    table[idx] += p;
  });
  return table;
}

}  // namespace detail

/// P(full) as the product of CPT factors (Markov factorization).
inline double joint(const CausalModel& model, const Assignment& full) {
  auto dense = model.to_dense(full);
  for (int v = 0; v < model.num_variables(); ++v) {
    if (dense[static_cast<std::size_t>(v)] < 0) {
      throw PartialAssignment("joint() requires every variable bound; '" +
                              model.variable(v).name + "' is free");
    }
  }
  return detail::joint_dense(model, dense);
}

/// Observational marginal: sum of joint over all completions of `partial`.
inline double marginal(const CausalModel& model, const Assignment& partial) {
  auto dense = model.to_dense(partial);
  double total = 0.0;
  detail::for_each_completion(model, dense, [&](const std::vector<int>& full) {
    total += detail::joint_dense(model, full);
  });
  return total;
}

/// P(target | do(spec)) by truncated factorization.
inline double intervene(const CausalModel& model, const InterventionSpec& spec,
                        const Assignment& target) {
  for (const auto& [name, value] : spec.forced.bindings()) {
    (void)value;
    if (target.contains(name)) {
      throw OverlappingDoAndTarget("'" + name +
                                   "' appears in both do() and target");
    }
  }
  auto dense = model.to_dense(spec.forced);
  std::vector<bool> intervened(static_cast<std::size_t>(model.num_variables()),
                               false);
  for (const auto& [name, value] : spec.forced.bindings()) {
    (void)value;
    intervened[static_cast<std::size_t>(model.index(name))] = true;
  }
  for (const auto& [name, value] : target.bindings()) {
    const int i = model.index(name);
    if (value < 0 || value >= model.card(i)) {
      throw DomainMismatch("value out of range for '" + name + "'");
    }
    dense[static_cast<std::size_t>(i)] = value;
  }
  return detail::truncated_sum(model, dense, intervened);
}

inline double intervene(const CausalModel& model, const Assignment& forced,
                        const Assignment& target) {
  return intervene(model, InterventionSpec{forced}, target);
}

/// TE_y(s2, s1) = P(y|do(s2)) - P(y|do(s1)).
inline double total_effect(const CausalModel& model, const Assignment& y,
                           const Assignment& s2, const Assignment& s1) {
  auto keys = [](const Assignment& a) {
    std::vector<std::string> k;
    for (const auto& [name, value] : a.bindings()) {
      (void)value;
      k.push_back(name);
    }
    return k;
  };
  if (keys(s1) != keys(s2)) {
    throw MismatchedSensitiveSets(
        "total_effect: s1 and s2 must bind the same variables");
  }
  return intervene(model, s2, y) - intervene(model, s1, y);
}

/// Direct (path-specific, direct-edge bundle) effect of M on X=x:
/// sum_z Cpt(x | m, z) P(z|do(m')) - P(x|do(m')), z over Pa(X) \ M.
inline double direct_effect(const CausalModel& model, const Assignment& x_is,
                            const std::vector<std::string>& m_vars,
                            const Assignment& m, const Assignment& m_prime) {
  if (x_is.size() != 1) {
    throw PartialAssignment("direct_effect: x must bind exactly one variable");
  }
  const std::string x_name = x_is.bindings().begin()->first;
  const int x_node = model.index(x_name);
  const int x_value = x_is.bindings().begin()->second;
  if (x_value < 0 || x_value >= model.card(x_node)) {
    throw DomainMismatch("direct_effect: x value out of range");
  }

  const auto& parents = model.parents(x_node);
  std::vector<bool> in_m(static_cast<std::size_t>(model.num_variables()),
                         false);
  for (const auto& name : m_vars) {
    const int i = model.index(name);
    if (std::find(parents.begin(), parents.end(), i) == parents.end()) {
      throw NotAParent("'" + name + "' is not a parent of '" + x_name + "'");
    }
    in_m[static_cast<std::size_t>(i)] = true;
    if (!m.contains(name) || !m_prime.contains(name)) {
      throw PartialAssignment("direct_effect: m and m' must bind all of M");
    }
  }

  std::vector<int> mediators;  // Pa(X) \ M, in parent order
  for (const int p : parents) {
    if (!in_m[static_cast<std::size_t>(p)]) mediators.push_back(p);
  }

  // Interventional distribution of the mediators (and of X) under do(m').
  auto dense = model.to_dense(m_prime);
  std::vector<bool> intervened(static_cast<std::size_t>(model.num_variables()),
                               false);
  for (const auto& name : m_vars) {
    intervened[static_cast<std::size_t>(model.index(name))] = true;
  }
  const auto mediator_dist =
      detail::interventional_table(model, dense, intervened, mediators);
  const auto x_dist = detail::interventional_table(model, dense, intervened,
                                                   {x_node});

  // Row lookup for Cpt(x | m, z): parents read m for M and z elsewhere.
  // Only the M coordinates of `m` are consulted.
  std::vector<int> pa_state(static_cast<std::size_t>(model.num_variables()),
                            -1);
  for (const auto& name : m_vars) {
    pa_state[static_cast<std::size_t>(model.index(name))] = m.at(name);
  }
  std::vector<int> med_cards;
  med_cards.reserve(mediators.size());
  for (const int z : mediators) med_cards.push_back(model.card(z));

  double effect = 0.0;
  std::vector<int> z_values(mediators.size());
  for (std::size_t zi = 0; zi < mediator_dist.size(); ++zi) {
    detail::mixed_radix_decode(zi, med_cards, z_values);
    for (std::size_t i = 0; i < mediators.size(); ++i) {
      pa_state[static_cast<std::size_t>(mediators[i])] = z_values[i];
    }
    effect += model.cpt_value(x_node, model.pa_row(x_node, pa_state), x_value) *
              mediator_dist[zi];
  }
  return effect - x_dist[static_cast<std::size_t>(x_value)];
}

/// Edge flow of the direct-edge bundle M -> X at M=m: the softmax over x of
/// E_{m' ~ P(m')}[SE_{pi,x}(m, m')]. Strictly positive and sums to 1.
inline DistributionTable edge_flow(const CausalModel& model,
                                   const std::string& x_name,
                                   const std::vector<std::string>& m_vars,
                                   const Assignment& m) {
  const int x_node = model.index(x_name);
  const auto& parents = model.parents(x_node);
  std::vector<int> m_nodes;
  for (const auto& name : m_vars) {
    const int i = model.index(name);
    if (std::find(parents.begin(), parents.end(), i) == parents.end()) {
      throw NotAParent("'" + name + "' is not a parent of '" + x_name + "'");
    }
    m_nodes.push_back(i);
  }

  std::vector<int> m_cards;
  m_cards.reserve(m_nodes.size());
  for (const int i : m_nodes) m_cards.push_back(model.card(i));
  std::size_t m_rows = 1;
  for (const int c : m_cards) m_rows *= static_cast<std::size_t>(c);

  const int k = model.card(x_node);
  std::vector<double> expected(static_cast<std::size_t>(k), 0.0);
  std::vector<int> m_values(m_nodes.size());
  Assignment m_prime;
  for (std::size_t row = 0; row < m_rows; ++row) {
    detail::mixed_radix_decode(row, m_cards, m_values);
    m_prime = Assignment{};
    for (std::size_t i = 0; i < m_nodes.size(); ++i) {
      m_prime.set(model.variable(m_nodes[i]).name, m_values[i]);
    }
    const double weight = marginal(model, m_prime);
    if (weight == 0.0) continue;
    for (int x = 0; x < k; ++x) {
      Assignment x_is;
      x_is.set(x_name, x);
      expected[static_cast<std::size_t>(x)] +=
          weight * direct_effect(model, x_is, m_vars, m, m_prime);
    }
  }

  // Softmax with max subtraction for bit-stable results; SE values are in
  // [-1,1] so this is about reproducibility, not overflow.
  double max_e = expected[0];
  for (const double e : expected) max_e = std::max(max_e, e);
  double denom = 0.0;
  DistributionTable flow;
  flow.over = {x_name};
  flow.probs.resize(static_cast<std::size_t>(k));
  for (int x = 0; x < k; ++x) {
    flow.probs[static_cast<std::size_t>(x)] =
        std::exp(expected[static_cast<std::size_t>(x)] - max_e);
    denom += flow.probs[static_cast<std::size_t>(x)];
  }
  for (double& p : flow.probs) p /= denom;
  return flow;
}

}  // namespace edgefair
