#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "edgefair/assignment.hpp"
#include "edgefair/errors.hpp"

namespace edgefair {

inline constexpr double kRowSumTolerance = 1e-9;

struct Variable {
  std::string name;
  std::vector<std::string> domain;  // value label per index 0..k-1
};

struct EdgeId {
  std::string from;
  std::string to;

  friend bool operator==(const EdgeId& a, const EdgeId& b) {
    return a.from == b.from && a.to == b.to;
  }
  friend bool operator<(const EdgeId& a, const EdgeId& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  }
  std::string to_string() const { return from + "->" + to; }
};

/// Conditional probability table of one node. Rows are parent assignments in
/// mixed-radix order over parent_order with the FIRST parent as the most
/// significant digit; columns are child values. Root nodes have an empty
/// parent_order and a single prior row.
struct Cpt {
  std::string child;
  std::vector<std::string> parent_order;
  std::vector<std::vector<double>> table;
};

namespace detail {

inline std::size_t mixed_radix_index(const std::vector<int>& values,
                                     const std::vector<int>& cards) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    idx = idx * static_cast<std::size_t>(cards[i]) +
          static_cast<std::size_t>(values[i]);
  }
  return idx;
}

inline void mixed_radix_decode(std::size_t idx, const std::vector<int>& cards,
                               std::vector<int>& out) {
  out.assign(cards.size(), 0);
  for (std::size_t i = cards.size(); i-- > 0;) {
    out[i] = static_cast<int>(idx % static_cast<std::size_t>(cards[i]));
    idx /= static_cast<std::size_t>(cards[i]);
  }
}

}  // namespace detail

/// Immutable discrete Markovian causal model: DAG + one CPT per node +
/// sensitive-node flags. All queries are pure and safe to share across
/// threads after construction.
class CausalModel {
 public:
  static CausalModel make(std::vector<Variable> variables,
                          std::vector<EdgeId> edges,
                          std::vector<Cpt> cpts,
                          std::set<std::string> sensitive) {
    CausalModel m;
    m.variables_ = std::move(variables);
    for (int i = 0; i < static_cast<int>(m.variables_.size()); ++i) {
      const auto& v = m.variables_[static_cast<std::size_t>(i)];
      if (m.name_to_index_.count(v.name)) {
        throw UnknownVariableReference("duplicate variable '" + v.name + "'");
      }
      if (v.domain.size() < 2) {
        throw DomainMismatch("variable '" + v.name +
                             "' needs at least 2 domain values");
      }
      std::set<std::string> labels(v.domain.begin(), v.domain.end());
      if (labels.size() != v.domain.size()) {
        throw DomainMismatch("variable '" + v.name +
                             "' has duplicate domain labels");
      }
      m.name_to_index_[v.name] = i;
    }

    const int n = static_cast<int>(m.variables_.size());
    std::vector<std::set<int>> parent_sets(static_cast<std::size_t>(n));
    m.children_.assign(static_cast<std::size_t>(n), {});
    for (const auto& e : edges) {
      const int from = m.require_index(e.from);
      const int to = m.require_index(e.to);
      if (from == to) {
        throw CycleDetected("self-loop on '" + e.from + "'");
      }
      if (parent_sets[static_cast<std::size_t>(to)].insert(from).second) {
        m.children_[static_cast<std::size_t>(from)].push_back(to);
      }
    }
    for (auto& c : m.children_) std::sort(c.begin(), c.end());

    // One CPT per variable; its parent_order must match the in-edges.
    m.parents_.assign(static_cast<std::size_t>(n), {});
    m.cpts_.resize(static_cast<std::size_t>(n));
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (auto& cpt : cpts) {
      const int child = m.require_index(cpt.child);
      if (seen[static_cast<std::size_t>(child)]) {
        throw DomainMismatch("duplicate CPT for '" + cpt.child + "'");
      }
      seen[static_cast<std::size_t>(child)] = true;
      std::set<int> order_set;
      for (const auto& p : cpt.parent_order) {
        order_set.insert(m.require_index(p));
      }
      if (order_set != parent_sets[static_cast<std::size_t>(child)] ||
          order_set.size() != cpt.parent_order.size()) {
        throw DomainMismatch("CPT parents of '" + cpt.child +
                             "' do not match graph edges");
      }
      for (const auto& p : cpt.parent_order) {
        m.parents_[static_cast<std::size_t>(child)].push_back(
            m.require_index(p));
      }
      m.cpts_[static_cast<std::size_t>(child)] = std::move(cpt);
    }
    for (int i = 0; i < n; ++i) {
      if (!seen[static_cast<std::size_t>(i)]) {
        throw DomainMismatch("missing CPT for '" +
                             m.variables_[static_cast<std::size_t>(i)].name +
                             "'");
      }
    }

    m.sensitive_names_ = std::move(sensitive);
    m.sensitive_.assign(static_cast<std::size_t>(n), false);
    for (const auto& s : m.sensitive_names_) {
      m.sensitive_[static_cast<std::size_t>(m.require_index(s))] = true;
      m.sensitive_indices_.push_back(m.require_index(s));
    }
    std::sort(m.sensitive_indices_.begin(), m.sensitive_indices_.end());

    m.compute_topological_order();  // throws CycleDetected
    m.compile_tables();             // throws on dimension / normalization
    return m;
  }

  int num_variables() const { return static_cast<int>(variables_.size()); }

  const Variable& variable(int i) const {
    return variables_[static_cast<std::size_t>(i)];
  }

  bool has_variable(const std::string& name) const {
    return name_to_index_.count(name) > 0;
  }

  int index(const std::string& name) const { return require_index(name); }

  int card(int i) const {
    return static_cast<int>(variables_[static_cast<std::size_t>(i)].domain.size());
  }

  const std::vector<int>& parents(int i) const {
    return parents_[static_cast<std::size_t>(i)];
  }

  const std::vector<int>& children(int i) const {
    return children_[static_cast<std::size_t>(i)];
  }

  bool is_sensitive(int i) const { return sensitive_[static_cast<std::size_t>(i)]; }
  bool is_sensitive(const std::string& name) const {
    return is_sensitive(require_index(name));
  }

  const std::vector<int>& sensitive_indices() const { return sensitive_indices_; }
  const std::set<std::string>& sensitive_names() const { return sensitive_names_; }

  const std::vector<int>& topological_order() const { return topo_order_; }

  const Cpt& cpt(int i) const { return cpts_[static_cast<std::size_t>(i)]; }

  std::size_t pa_row_count(int node) const {
    return pa_row_count_[static_cast<std::size_t>(node)];
  }

  /// Parent row index for `node` given a dense state that binds all parents.
  std::size_t pa_row(int node, const std::vector<int>& dense) const {
    std::size_t idx = 0;
    for (const int p : parents_[static_cast<std::size_t>(node)]) {
      idx = idx * static_cast<std::size_t>(card(p)) +
            static_cast<std::size_t>(dense[static_cast<std::size_t>(p)]);
    }
    return idx;
  }

  double cpt_value(int node, std::size_t pa_row_index, int x) const {
    return flat_tables_[static_cast<std::size_t>(node)]
                       [pa_row_index * static_cast<std::size_t>(card(node)) +
                        static_cast<std::size_t>(x)];
  }

  std::vector<EdgeId> edges() const {
    std::vector<EdgeId> out;
    for (int child = 0; child < num_variables(); ++child) {
      for (const int p : parents(child)) {
        out.push_back({variable(p).name, variable(child).name});
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Every directed edge whose tail is sensitive, sorted by (from, to).
  std::vector<EdgeId> unfair_edges() const {
    std::vector<EdgeId> out;
    for (const auto& e : edges()) {
      if (is_sensitive(e.from)) out.push_back(e);
    }
    return out;
  }

  /// Dense state vector from an Assignment; unbound entries are -1.
  /// Validates names and value ranges.
  std::vector<int> to_dense(const Assignment& a) const {
    std::vector<int> dense(static_cast<std::size_t>(num_variables()), -1);
    for (const auto& [name, value] : a.bindings()) {
      const int i = require_index(name);
      if (value < 0 || value >= card(i)) {
        throw DomainMismatch("value " + std::to_string(value) +
                             " out of range for '" + name + "'");
      }
      dense[static_cast<std::size_t>(i)] = value;
    }
    return dense;
  }

 private:
  CausalModel() = default;

  int require_index(const std::string& name) const {
    auto it = name_to_index_.find(name);
    if (it == name_to_index_.end()) {
      throw UnknownVariable("unknown variable '" + name + "'");
    }
    return it->second;
  }

  void compute_topological_order() {
    const int n = num_variables();
    std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      in_degree[static_cast<std::size_t>(i)] =
          static_cast<int>(parents_[static_cast<std::size_t>(i)].size());
    }
    std::vector<int> ready;
    for (int i = 0; i < n; ++i) {
      if (in_degree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    topo_order_.clear();
    while (!ready.empty()) {
      std::sort(ready.begin(), ready.end(), std::greater<>());
      const int node = ready.back();
      ready.pop_back();
      topo_order_.push_back(node);
      for (const int c : children_[static_cast<std::size_t>(node)]) {
        if (--in_degree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
      }
    }
    if (static_cast<int>(topo_order_.size()) != n) {
      throw CycleDetected("edge set contains a directed cycle");
    }
  }

  void compile_tables() {
    const int n = num_variables();
    flat_tables_.resize(static_cast<std::size_t>(n));
    pa_row_count_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& cpt = cpts_[static_cast<std::size_t>(i)];
      std::size_t rows = 1;
      for (const int p : parents_[static_cast<std::size_t>(i)]) {
        rows *= static_cast<std::size_t>(card(p));
      }
      pa_row_count_[static_cast<std::size_t>(i)] = rows;
      if (cpt.table.size() != rows) {
        throw DomainMismatch("CPT of '" + cpt.child + "' has " +
                             std::to_string(cpt.table.size()) +
                             " rows, expected " + std::to_string(rows));
      }
      auto& flat = flat_tables_[static_cast<std::size_t>(i)];
      flat.reserve(rows * static_cast<std::size_t>(card(i)));
      for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = cpt.table[r];
        if (static_cast<int>(row.size()) != card(i)) {
          throw DomainMismatch("CPT row of '" + cpt.child +
                               "' has wrong width");
        }
        double sum = 0.0;
        for (const double p : row) {
          if (p < 0.0 || !std::isfinite(p)) {
            throw CptRowNotNormalized("CPT of '" + cpt.child + "', row " +
                                      std::to_string(r) +
                                      ": negative or non-finite entry");
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
          throw CptRowNotNormalized("CPT of '" + cpt.child + "', row " +
                                    std::to_string(r) + ": sums to " +
                                    std::to_string(sum));
        }
        flat.insert(flat.end(), row.begin(), row.end());
      }
    }
  }

  std::vector<Variable> variables_;
  std::map<std::string, int> name_to_index_;
  std::vector<std::vector<int>> parents_;   // ordered per CPT parent_order
  std::vector<std::vector<int>> children_;  // sorted
  std::vector<Cpt> cpts_;
  std::vector<std::vector<double>> flat_tables_;
  std::vector<std::size_t> pa_row_count_;
  std::vector<bool> sensitive_;
  std::vector<int> sensitive_indices_;
  std::set<std::string> sensitive_names_;
  std::vector<int> topo_order_;
};

/// Splits Pa(x) into (unfair parents, fair parents), both in parent order.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
parent_partition(const CausalModel& model, const std::string& x) {
  const int node = model.index(x);
  std::vector<std::string> unfair;
  std::vector<std::string> fair;
  for (const int p : model.parents(node)) {
    if (model.is_sensitive(p)) {
      unfair.push_back(model.variable(p).name);
    } else {
      fair.push_back(model.variable(p).name);
    }
  }
  return {unfair, fair};
}

/// All directed paths from any source in `sources` to `y`. Sources must be
/// sensitive nodes. On a DAG every directed path is simple, so the exhaustive
/// DFS below terminates and produces no duplicates.
inline std::vector<std::vector<std::string>> unfair_paths(
    const CausalModel& model, const std::vector<std::string>& sources,
    const std::string& y) {
  const int target = model.index(y);
  std::vector<std::vector<std::string>> paths;
  std::vector<int> stack;

  auto dfs = [&](auto&& self, int node) -> void {
    stack.push_back(node);
    if (node == target && stack.size() > 1) {
      std::vector<std::string> named;
      named.reserve(stack.size());
      for (const int i : stack) named.push_back(model.variable(i).name);
      paths.push_back(std::move(named));
    } else if (node != target) {
      for (const int c : model.children(node)) self(self, c);
    }
    stack.pop_back();
  };

  for (const auto& s : sources) {
    const int src = model.index(s);
    if (!model.is_sensitive(src)) {
      throw NotSensitiveSource("'" + s + "' is not a sensitive node");
    }
    if (src == target) continue;
    stack.clear();
    stack.push_back(src);
    for (const int c : model.children(src)) dfs(dfs, c);
  }
  return paths;
}

}  // namespace edgefair
