#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgefair/decomposition.hpp"
#include "edgefair/inference.hpp"
#include "edgefair/model.hpp"

namespace edgefair {

/// Edge unfairness per unfair edge.
using UnfairnessVector = std::map<EdgeId, double>;

inline constexpr double kZeroUpperTolerance = 1e-9;  // Def. 9 case split
inline constexpr double kDenominatorEpsilon = 1e-12;

namespace detail {

/// Observational joint table over (node, Pa(node)), indexed like the node's
/// flat CPT: [pa_row * card + x]. One pass over the full joint.
inline std::vector<double> node_joint_table(const CausalModel& model,
                                            int node) {
  std::vector<double> table(
      model.pa_row_count(node) * static_cast<std::size_t>(model.card(node)),
      0.0);
  std::vector<int> state(static_cast<std::size_t>(model.num_variables()), -1);
  for_each_completion(model, state, [&](const std::vector<int>& full) {
    const double p = joint_dense(model, full);
    table[model.pa_row(node, full) * static_cast<std::size_t>(model.card(node)) +
          static_cast<std::size_t>(full[static_cast<std::size_t>(node)])] += p;
  });
  return table;
}

inline const FlowTables& flows_for(
    const std::map<std::string, FlowTables>& flows, const std::string& node) {
  auto it = flows.find(node);
  if (it == flows.end()) {
    throw UnknownVariable("no flow tables for '" + node + "'");
  }
  return it->second;
}

inline const FittedCpt& fitted_for(
    const std::map<std::string, FittedCpt>& fitted, const std::string& node) {
  auto it = fitted.find(node);
  if (it == fitted.end()) {
    throw UnknownVariable("no fitted CPT for '" + node + "'");
  }
  return it->second;
}

}  // namespace detail

/// mu_e of Def. 7: the P(x, pa(X))-weighted mean of
/// |f^w(flows) - f^w(flow of K zeroed)| / UnfairFlow_K(x, pa).
inline double edge_unfairness(const CausalModel& model,
                              const std::map<std::string, FittedCpt>& fitted,
                              const std::map<std::string, FlowTables>& flows,
                              const EdgeId& e) {
  if (!model.is_sensitive(e.from)) {
    throw NotUnfairEdge("'" + e.to_string() + "' is not an unfair edge");
  }
  const auto& ft = detail::flows_for(flows, e.to);
  const auto& fit = detail::fitted_for(fitted, e.to);
  const std::size_t k = static_cast<std::size_t>(ft.unfair_index(e.from));
  const int node = model.index(e.to);
  const int card = model.card(node);
  const auto weight = detail::node_joint_table(model, node);
  const std::set<std::string> zero_k{e.from};

  double mu = 0.0;
  for (std::size_t r = 0; r < model.pa_row_count(node); ++r) {
    for (int x = 0; x < card; ++x) {
      const double w =
          weight[r * static_cast<std::size_t>(card) + static_cast<std::size_t>(x)];
      if (w == 0.0) continue;
      const double with_flow = predict(fit, ft, x, r);
      const double without_flow = predict(fit, ft, x, r, zero_k);
      mu += w * std::abs(with_flow - without_flow) / ft.unfair_flow(k, x, r);
    }
  }
  return mu;
}

inline UnfairnessVector edge_unfairness_all(
    const CausalModel& model, const std::map<std::string, FittedCpt>& fitted,
    const std::map<std::string, FlowTables>& flows) {
  UnfairnessVector mu;
  for (const auto& e : model.unfair_edges()) {
    mu[e] = edge_unfairness(model, fitted, flows, e);
  }
  return mu;
}

namespace detail {

inline void validate_query(const CausalModel& model, const Assignment& s,
                           const Assignment& y) {
  if (s.empty()) {
    throw IncompleteSensitiveAssignment("query s binds no sensitive node");
  }
  for (const auto& [name, value] : s.bindings()) {
    const int i = model.index(name);
    if (!model.is_sensitive(i)) {
      throw IncompleteSensitiveAssignment("query variable '" + name +
                                          "' is not sensitive");
    }
    if (value < 0 || value >= model.card(i)) {
      throw DomainMismatch("query value out of range for '" + name + "'");
    }
  }
  if (y.size() != 1) {
    throw IncompleteSensitiveAssignment(
        "query y must bind exactly the decision node");
  }
  const auto& [y_name, y_value] = *y.bindings().begin();
  const int yi = model.index(y_name);
  if (model.is_sensitive(yi) || s.contains(y_name)) {
    throw IncompleteSensitiveAssignment("decision node '" + y_name +
                                        "' cannot be sensitive");
  }
  if (y_value < 0 || y_value >= model.card(yi)) {
    throw DomainMismatch("query value out of range for '" + y_name + "'");
  }
}

}  // namespace detail

/// Eq. 16: C = sum_{s' != s} P(s') * TE_y(s, s').
inline double cumulative_unfairness(const CausalModel& model,
                                    const Assignment& s, const Assignment& y) {
  detail::validate_query(model, s, y);
  std::vector<int> query_nodes;
  for (const auto& [name, value] : s.bindings()) {
    (void)value;
    query_nodes.push_back(model.index(name));
  }
  std::vector<int> cards;
  for (const int i : query_nodes) cards.push_back(model.card(i));
  std::size_t rows = 1;
  for (const int c : cards) rows *= static_cast<std::size_t>(c);

  const double p_y_do_s = intervene(model, s, y);
  std::vector<int> values(query_nodes.size());
  double c = 0.0;
  for (std::size_t row = 0; row < rows; ++row) {
    detail::mixed_radix_decode(row, cards, values);
    Assignment s_prime;
    bool same = true;
    for (std::size_t i = 0; i < query_nodes.size(); ++i) {
      const std::string& name = model.variable(query_nodes[i]).name;
      s_prime.set(name, values[i]);
      same = same && values[i] == s.at(name);
    }
    if (same) continue;
    const double weight = marginal(model, s_prime);
    if (weight == 0.0) continue;
    c += weight * (p_y_do_s - intervene(model, s_prime, y));
  }
  return c;
}

/// Evaluates Eq. 18 as a function of mu, holding the model, flows and the
/// (s, y) query fixed. C^upper is affine of degree 1 in every mu coordinate,
/// which sensitivity() exploits.
class UpperBoundEvaluator {
 public:
  UpperBoundEvaluator(const CausalModel& model,
                      const std::map<std::string, FlowTables>& flows,
                      const Assignment& s, const Assignment& y)
      : model_(model) {
    detail::validate_query(model, s, y);
    const int n = model.num_variables();
    in_query_.assign(static_cast<std::size_t>(n), false);
    query_value_.assign(static_cast<std::size_t>(n), -1);
    for (const auto& [name, value] : s.bindings()) {
      const int i = model.index(name);
      in_query_[static_cast<std::size_t>(i)] = true;
      query_value_[static_cast<std::size_t>(i)] = value;
      query_nodes_.push_back(i);
    }
    const auto& [y_name, y_value] = *y.bindings().begin();
    y_node_ = model.index(y_name);
    y_value_ = y_value;

    for (int i = 0; i < n; ++i) {
      if (!in_query_[static_cast<std::size_t>(i)] && i != y_node_) {
        free_nodes_.push_back(i);
      }
    }

    // Only nodes with unfair parents carry a mu-dependent factor; every
    // other node contributes factor 1.
    for (int i = 0; i < n; ++i) {
      if (in_query_[static_cast<std::size_t>(i)]) continue;
      const auto [unfair, fair] = parent_partition(model, model.variable(i).name);
      (void)fair;
      if (unfair.empty()) continue;
      NodeTerm term;
      term.node = i;
      term.flows = &detail::flows_for(flows, model.variable(i).name);
      for (const auto& a : unfair) {
        term.unfair_nodes.push_back(model.index(a));
        term.edges.push_back(EdgeId{a, model.variable(i).name});
      }
      term.joint = detail::node_joint_table(model, i);
      product_terms_.push_back(std::move(term));
    }

    // Observational marginal over the query set, for the P(s') weights.
    std::vector<int> state(static_cast<std::size_t>(n), -1);
    for (const int i : query_nodes_) query_cards_.push_back(model.card(i));
    std::size_t rows = 1;
    for (const int c : query_cards_) rows *= static_cast<std::size_t>(c);
    query_marginal_.assign(rows, 0.0);
    detail::for_each_completion(model, state, [&](const std::vector<int>& full) {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < query_nodes_.size(); ++i) {
        idx = idx * static_cast<std::size_t>(query_cards_[i]) +
              static_cast<std::size_t>(
                  full[static_cast<std::size_t>(query_nodes_[i])]);
      }
      query_marginal_[idx] += detail::joint_dense(model, full);
    });
    std::size_t s_idx = 0;
    for (std::size_t i = 0; i < query_nodes_.size(); ++i) {
      s_idx = s_idx * static_cast<std::size_t>(query_cards_[i]) +
              static_cast<std::size_t>(
                  query_value_[static_cast<std::size_t>(query_nodes_[i])]);
    }
    s_row_ = s_idx;
  }

  double evaluate(const UnfairnessVector& mu) const {
    eps_guard_count_ = 0;
    // Resolve mu entries once per evaluation.
    std::vector<std::vector<double>> mu_of(product_terms_.size());
    for (std::size_t t = 0; t < product_terms_.size(); ++t) {
      for (const auto& e : product_terms_[t].edges) {
        auto it = mu.find(e);
        if (it == mu.end()) {
          throw MissingMu("no edge unfairness entry for '" + e.to_string() +
                          "'");
        }
        mu_of[t].push_back(it->second);
      }
    }

    const int n = model_.num_variables();
    std::vector<int> dense(static_cast<std::size_t>(n), -1);
    dense[static_cast<std::size_t>(y_node_)] = y_value_;

    std::vector<int> free_cards;
    for (const int i : free_nodes_) free_cards.push_back(model_.card(i));
    std::size_t free_rows = 1;
    for (const int c : free_cards) free_rows *= static_cast<std::size_t>(c);

    std::size_t query_rows = query_marginal_.size();
    std::vector<int> free_values(free_nodes_.size());
    std::vector<int> s_prime(query_nodes_.size());

    double total = 0.0;
    for (std::size_t q = 0; q < query_rows; ++q) {
      if (q == s_row_) continue;
      const double weight = query_marginal_[q];
      detail::mixed_radix_decode(q, query_cards_, s_prime);
      double inner = 0.0;
      for (std::size_t f = 0; f < free_rows; ++f) {
        detail::mixed_radix_decode(f, free_cards, free_values);
        for (std::size_t i = 0; i < free_nodes_.size(); ++i) {
          dense[static_cast<std::size_t>(free_nodes_[i])] = free_values[i];
        }
        double product = 1.0;
        for (std::size_t t = 0; t < product_terms_.size() && product != 0.0;
             ++t) {
          product *= factor(product_terms_[t], mu_of[t], dense, s_prime);
        }
        inner += product;
      }
      total += weight * inner;
    }
    return total;
  }

  long eps_guard_count() const { return eps_guard_count_; }

 private:
  struct NodeTerm {
    int node = 0;
    const FlowTables* flows = nullptr;
    std::vector<int> unfair_nodes;  // aligned with flows->unfair_parents()
    std::vector<EdgeId> edges;
    std::vector<double> joint;  // [pa_row * card + x]
  };

  int query_value_of(int node, const std::vector<int>& s_prime) const {
    for (std::size_t i = 0; i < query_nodes_.size(); ++i) {
      if (query_nodes_[i] == node) return s_prime[i];
    }
    return -1;
  }

  /// One Eq. 18 factor: sum over the node's unfair parents of
  /// [flow(s-side)/P|_s + flow(s'-side)/P|_s'] * mu, with Eq. 19 overrides.
  double factor(const NodeTerm& term, const std::vector<double>& mu,
                const std::vector<int>& dense,
                const std::vector<int>& s_prime) const {
    const int v = term.node == y_node_
                      ? y_value_
                      : dense[static_cast<std::size_t>(term.node)];
    const int card = model_.card(term.node);

    std::size_t row_s = 0;
    std::size_t row_sp = 0;
    for (const int p : model_.parents(term.node)) {
      int value_s;
      int value_sp;
      if (in_query_[static_cast<std::size_t>(p)]) {
        value_s = query_value_[static_cast<std::size_t>(p)];
        value_sp = query_value_of(p, s_prime);
      } else {
        value_s = dense[static_cast<std::size_t>(p)];
        value_sp = value_s;
      }
      row_s = row_s * static_cast<std::size_t>(model_.card(p)) +
              static_cast<std::size_t>(value_s);
      row_sp = row_sp * static_cast<std::size_t>(model_.card(p)) +
               static_cast<std::size_t>(value_sp);
    }
    const double denom_s =
        term.joint[row_s * static_cast<std::size_t>(card) +
                   static_cast<std::size_t>(v)];
    const double denom_sp =
        term.joint[row_sp * static_cast<std::size_t>(card) +
                   static_cast<std::size_t>(v)];

    double sum = 0.0;
    for (std::size_t k = 0; k < term.unfair_nodes.size(); ++k) {
      const int a_node = term.unfair_nodes[k];
      const bool queried = in_query_[static_cast<std::size_t>(a_node)];
      const int a_s = queried ? query_value_[static_cast<std::size_t>(a_node)]
                              : dense[static_cast<std::size_t>(a_node)];
      const int a_sp = queried ? query_value_of(a_node, s_prime)
                               : dense[static_cast<std::size_t>(a_node)];
      const double flow_s = term.flows->unfair_flow_at(k, v, a_s);
      const double flow_sp = term.flows->unfair_flow_at(k, v, a_sp);
      sum += (ratio(flow_s, denom_s) + ratio(flow_sp, denom_sp)) * mu[k];
    }
    return sum;
  }

  double ratio(double flow, double denom) const {
    if (denom >= kDenominatorEpsilon) return flow / denom;
    if (flow < kDenominatorEpsilon) return 0.0;  // 0/0-like term is skipped
    ++eps_guard_count_;
    return flow / kDenominatorEpsilon;
  }

  const CausalModel& model_;
  std::vector<bool> in_query_;
  std::vector<int> query_value_;
  std::vector<int> query_nodes_;
  std::vector<int> query_cards_;
  std::vector<double> query_marginal_;
  std::size_t s_row_ = 0;
  int y_node_ = 0;
  int y_value_ = 0;
  std::vector<int> free_nodes_;
  std::vector<NodeTerm> product_terms_;
  mutable long eps_guard_count_ = 0;
};

/// Theorem 3's closed-form bound (Eq. 18) on |C|.
inline double upper_bound(const CausalModel& model,
                          const std::map<std::string, FlowTables>& flows,
                          const UnfairnessVector& mu, const Assignment& s,
                          const Assignment& y) {
  return UpperBoundEvaluator(model, flows, s, y).evaluate(mu);
}

/// dC^upper/dmu_e at the current mu. Exact forward difference: the bound is
/// degree 1 in each mu coordinate, so the quotient is step-size invariant
/// (asserted with h=1 against h=0.5).
inline double sensitivity(const CausalModel& model,
                          const std::map<std::string, FlowTables>& flows,
                          const UnfairnessVector& mu, const EdgeId& e,
                          const Assignment& s, const Assignment& y) {
  if (!mu.count(e)) {
    throw MissingMu("no edge unfairness entry for '" + e.to_string() + "'");
  }
  const UpperBoundEvaluator eval(model, flows, s, y);
  const double base = eval.evaluate(mu);
  UnfairnessVector bumped = mu;
  bumped[e] = mu.at(e) + 1.0;
  const double with_full_step = (eval.evaluate(bumped) - base) / 1.0;
  bumped[e] = mu.at(e) + 0.5;
  const double with_half_step = (eval.evaluate(bumped) - base) / 0.5;
  const double scale = std::max({1.0, std::abs(base), std::abs(with_full_step)});
  if (std::abs(with_full_step - with_half_step) > 1e-9 * scale) {
    throw BoundViolation("sensitivity is not step-size invariant for '" +
                         e.to_string() + "'");
  }
  return with_full_step;
}

/// Def. 9. C^upper is nonnegative by construction, so the two cases are
/// exhaustive with a zero tolerance on the first.
inline double potential(const CausalModel& model,
                        const std::map<std::string, FlowTables>& flows,
                        const UnfairnessVector& mu, const EdgeId& e,
                        const Assignment& s, const Assignment& y) {
  const UpperBoundEvaluator eval(model, flows, s, y);
  const double c_upper = eval.evaluate(mu);
  if (!mu.count(e)) {
    throw MissingMu("no edge unfairness entry for '" + e.to_string() + "'");
  }
  UnfairnessVector bumped = mu;
  bumped[e] = mu.at(e) + 1.0;
  const double sens = eval.evaluate(bumped) - c_upper;
  return c_upper <= kZeroUpperTolerance ? -std::abs(sens) : sens;
}

struct CumulativeReport {
  Assignment s;
  Assignment y;
  double c = 0.0;
  double c_upper = 0.0;
  std::map<EdgeId, std::pair<double, double>> per_edge;  // (sensitivity, potential)
  long eps_guard_count = 0;
};

/// Builds the full (s, y) report and enforces Theorem 3 at runtime:
/// |C| <= C^upper + 1e-9.
inline CumulativeReport cumulative_report(
    const CausalModel& model, const std::map<std::string, FittedCpt>& fitted,
    const std::map<std::string, FlowTables>& flows, const UnfairnessVector& mu,
    const Assignment& s, const Assignment& y) {
  (void)fitted;
  CumulativeReport report;
  report.s = s;
  report.y = y;
  const UpperBoundEvaluator eval(model, flows, s, y);
  report.c = cumulative_unfairness(model, s, y);
  report.c_upper = eval.evaluate(mu);
  report.eps_guard_count = eval.eps_guard_count();
  for (const auto& [e, value] : mu) {
    (void)value;
    UnfairnessVector bumped = mu;
    bumped[e] = mu.at(e) + 1.0;
    const double sens = eval.evaluate(bumped) - report.c_upper;
    const double pot =
        report.c_upper <= kZeroUpperTolerance ? -std::abs(sens) : sens;
    report.per_edge[e] = {sens, pot};
  }
  if (std::abs(report.c) > report.c_upper + kZeroUpperTolerance) {
    throw BoundViolation("|C| = " + std::to_string(std::abs(report.c)) +
                         " exceeds C^upper = " + std::to_string(report.c_upper) +
                         " for query s=" + s.to_string() +
                         ", y=" + y.to_string());
  }
  return report;
}

inline nlohmann::json report_to_json(const CumulativeReport& report,
                                     const UnfairnessVector& mu) {
  nlohmann::json j;
  j["s"] = report.s.to_string();
  j["y"] = report.y.to_string();
  j["c"] = report.c;
  j["cUpper"] = report.c_upper;
  j["epsGuardCount"] = report.eps_guard_count;
  j["edges"] = nlohmann::json::array();
  for (const auto& [e, sp] : report.per_edge) {
    j["edges"].push_back({{"edge", e.to_string()},
                          {"mu", mu.at(e)},
                          {"sensitivity", sp.first},
                          {"potential", sp.second}});
  }
  return j;
}

}  // namespace edgefair
