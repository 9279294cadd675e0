#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgefair/model.hpp"

namespace edgefair {

/// Graph-only description (no CPTs): variables, edges, sensitive flags.
/// The edge declaration order fixes each node's CPT parent order.
struct Skeleton {
  std::vector<Variable> variables;
  std::vector<EdgeId> edges;
  std::set<std::string> sensitive;

  std::vector<std::string> parents_of(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& e : edges) {
      if (e.to == name) out.push_back(e.from);
    }
    return out;
  }

  const Variable& variable(const std::string& name) const {
    for (const auto& v : variables) {
      if (v.name == name) return v;
    }
    throw UnknownVariable("unknown variable '" + name + "'");
  }
};

/// The synthetic bail-decision graph. Domains follow the published node
/// table (e.g. bail granted = 0); the edge list is the documented default
/// and can be overridden through a model file.
inline Skeleton bail_graph() {
  Skeleton s;
  s.variables = {
      {"R", {"AfricanAmerican", "Hispanic", "White"}},
      {"A", {"Old", "Young"}},
      {"G", {"Male", "Female", "Others"}},
      {"L", {"Literate", "Illiterate"}},
      {"E", {"NotEmployed", "Employed"}},
      {"C", {"Strong", "Weak"}},
      {"J", {"Granted", "Rejected"}},
  };
  s.edges = {
      {"R", "L"}, {"A", "L"},
      {"R", "E"}, {"G", "E"}, {"A", "E"}, {"L", "E"},
      {"R", "J"}, {"G", "J"}, {"L", "J"}, {"E", "J"}, {"C", "J"},
  };
  s.sensitive = {"R", "A", "G"};
  return s;
}

/// Edge parameters theta (one scalar per edge, summing to 1 over each
/// child's parents) and value scores lambda (one row per parent value,
/// summing to 1 over the child values). Root priors are an optional
/// extension; absent entries default to uniform.
struct ScoreSpec {
  std::map<EdgeId, double> theta;
  std::map<EdgeId, std::vector<std::vector<double>>> lambda;  // [a][v]
  std::map<std::string, std::vector<double>> priors;
};

namespace detail {

inline std::vector<double> dirichlet_row(std::size_t n, std::mt19937_64& rng,
                                         double alpha = 1.0) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> row(n);
  double sum = 0.0;
  for (double& x : row) {
    x = std::max(gamma(rng), 1e-9);
    sum += x;
  }
  for (double& x : row) x /= sum;
  // Pin the float sum to 1 through the last coordinate.
  double others = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) others += row[i];
  row[n - 1] = 1.0 - others;
  return row;
}

}  // namespace detail

/// Eq. 25: CPT(v|pa) = sum_{A in Pa(V)} theta_{A->V} lambda_{A=pa_A -> V=v}.
/// Valid rows come out automatically once the marginality constraints hold.
inline CausalModel cpts_from_scores(const Skeleton& skeleton,
                                    const ScoreSpec& spec) {
  std::vector<Cpt> cpts;
  for (const auto& var : skeleton.variables) {
    Cpt cpt;
    cpt.child = var.name;
    cpt.parent_order = skeleton.parents_of(var.name);
    const std::size_t card = var.domain.size();
    if (cpt.parent_order.empty()) {
      auto it = spec.priors.find(var.name);
      std::vector<double> prior;
      if (it != spec.priors.end()) {
        prior = it->second;
        if (prior.size() != card) {
          throw DomainMismatch("prior for '" + var.name + "' has wrong size");
        }
      } else {
        prior.assign(card, 1.0 / static_cast<double>(card));
      }
      cpt.table.push_back(std::move(prior));
      cpts.push_back(std::move(cpt));
      continue;
    }

    double theta_sum = 0.0;
    std::vector<double> thetas;
    std::vector<const std::vector<std::vector<double>>*> lambdas;
    std::vector<int> pa_cards;
    for (const auto& parent : cpt.parent_order) {
      const EdgeId e{parent, var.name};
      auto t = spec.theta.find(e);
      auto l = spec.lambda.find(e);
      if (t == spec.theta.end() || l == spec.lambda.end()) {
        throw IncompleteSpec("score spec misses edge '" + e.to_string() + "'");
      }
      if (t->second < 0.0 || t->second > 1.0) {
        throw MarginalityViolated("theta of '" + e.to_string() +
                                  "' outside [0,1]");
      }
      const std::size_t pa_card = skeleton.variable(parent).domain.size();
      if (l->second.size() != pa_card) {
        throw DomainMismatch("lambda of '" + e.to_string() +
                             "' has wrong parent dimension");
      }
      for (const auto& row : l->second) {
        if (row.size() != card) {
          throw DomainMismatch("lambda of '" + e.to_string() +
                               "' has wrong child dimension");
        }
        double row_sum = 0.0;
        for (const double x : row) {
          if (x < 0.0 || x > 1.0) {
            throw MarginalityViolated("lambda of '" + e.to_string() +
                                      "' outside [0,1]");
          }
          row_sum += x;
        }
        if (std::abs(row_sum - 1.0) > kRowSumTolerance) {
          throw MarginalityViolated("lambda rows of '" + e.to_string() +
                                    "' must sum to 1");
        }
      }
      theta_sum += t->second;
      thetas.push_back(t->second);
      lambdas.push_back(&l->second);
      pa_cards.push_back(static_cast<int>(pa_card));
    }
    if (std::abs(theta_sum - 1.0) > kRowSumTolerance) {
      throw MarginalityViolated("theta of '" + var.name +
                                "' parents must sum to 1, got " +
                                std::to_string(theta_sum));
    }

    std::size_t rows = 1;
    for (const int c : pa_cards) rows *= static_cast<std::size_t>(c);
    std::vector<int> pa_values(pa_cards.size());
    for (std::size_t r = 0; r < rows; ++r) {
      detail::mixed_radix_decode(r, pa_cards, pa_values);
      std::vector<double> row(card, 0.0);
      for (std::size_t p = 0; p < thetas.size(); ++p) {
        const auto& lrow =
            (*lambdas[p])[static_cast<std::size_t>(pa_values[p])];
        for (std::size_t v = 0; v < card; ++v) {
          row[v] += thetas[p] * lrow[v];
        }
      }
      cpt.table.push_back(std::move(row));
    }
    cpts.push_back(std::move(cpt));
  }
  return CausalModel::make(skeleton.variables, skeleton.edges, std::move(cpts),
                           skeleton.sensitive);
}

/// Deterministic default scores for the bail graph: uniform theta per child,
/// seeded sparse-Dirichlet lambda rows (alpha = 0.4 gives decisive value
/// scores, so the flows carry usable signal) and mild random root priors.
/// Shipped as a data file so experiments are reproducible bit-for-bit.
inline ScoreSpec default_bail_scores(std::uint64_t seed = 7) {
  const Skeleton skeleton = bail_graph();
  ScoreSpec spec;
  std::mt19937_64 rng(seed);
  for (const auto& var : skeleton.variables) {
    const auto parents = skeleton.parents_of(var.name);
    for (const auto& p : parents) {
      spec.theta[{p, var.name}] = 1.0 / static_cast<double>(parents.size());
    }
  }
  for (const auto& e : skeleton.edges) {
    const std::size_t pa_card = skeleton.variable(e.from).domain.size();
    const std::size_t card = skeleton.variable(e.to).domain.size();
    std::vector<std::vector<double>> rows;
    for (std::size_t a = 0; a < pa_card; ++a) {
      rows.push_back(detail::dirichlet_row(card, rng, 0.4));
    }
    spec.lambda[e] = std::move(rows);
  }
  for (const auto& var : skeleton.variables) {
    if (skeleton.parents_of(var.name).empty()) {
      spec.priors[var.name] = detail::dirichlet_row(var.domain.size(), rng, 3.0);
    }
  }
  return spec;
}

/// `count` seeded points on the simplex over `labels` (Dirichlet(1) draws).
inline std::vector<std::map<std::string, double>> simplex_grid_points(
    const std::vector<std::string>& labels, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::map<std::string, double>> points;
  for (int i = 0; i < count; ++i) {
    const auto row = detail::dirichlet_row(labels.size(), rng);
    std::map<std::string, double> point;
    for (std::size_t j = 0; j < labels.size(); ++j) point[labels[j]] = row[j];
    points.push_back(std::move(point));
  }
  return points;
}

/// Cross product of theta grids for Pa(J) and Pa(E), lambda held fixed.
/// 25 x 25 points reproduce the published 625-model sweep.
inline std::vector<CausalModel> model_grid(
    const Skeleton& skeleton,
    const std::vector<std::map<std::string, double>>& grid_j,
    const std::vector<std::map<std::string, double>>& grid_e,
    const ScoreSpec& base) {
  const auto check_point = [&](const std::map<std::string, double>& point,
                               const std::string& child) {
    const auto parents = skeleton.parents_of(child);
    double sum = 0.0;
    for (const auto& p : parents) {
      auto it = point.find(p);
      if (it == point.end()) {
        throw InvalidGridPoint("grid point misses theta for '" + p + "->" +
                               child + "'");
      }
      if (it->second < 0.0 || it->second > 1.0) {
        throw InvalidGridPoint("grid theta outside [0,1]");
      }
      sum += it->second;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw InvalidGridPoint("grid point for '" + child +
                             "' is not on the simplex");
    }
  };
  for (const auto& p : grid_j) check_point(p, "J");
  for (const auto& p : grid_e) check_point(p, "E");

  std::vector<CausalModel> models;
  models.reserve(grid_j.size() * grid_e.size());
  for (const auto& pj : grid_j) {
    for (const auto& pe : grid_e) {
      ScoreSpec spec = base;
      for (const auto& [parent, theta] : pj) spec.theta[{parent, "J"}] = theta;
      for (const auto& [parent, theta] : pe) spec.theta[{parent, "E"}] = theta;
      models.push_back(cpts_from_scores(skeleton, spec));
    }
  }
  return models;
}

struct Dataset {
  std::vector<std::string> columns;        // variable names, model order
  std::vector<std::vector<int>> rows;      // value indices per column
  std::uint64_t seed = 0;
};

/// Ancestral sampling in topological order; reproducible per seed.
inline Dataset sample(const CausalModel& model, std::size_t m,
                      std::uint64_t seed) {
  if (m < 1) throw EmptyDataset("sample: m must be >= 1");
  Dataset data;
  data.seed = seed;
  for (int i = 0; i < model.num_variables(); ++i) {
    data.columns.push_back(model.variable(i).name);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> state(static_cast<std::size_t>(model.num_variables()), -1);
  for (std::size_t r = 0; r < m; ++r) {
    for (const int v : model.topological_order()) {
      const std::size_t row = model.pa_row(v, state);
      const double u = unit(rng);
      double cumulative = 0.0;
      int drawn = model.card(v) - 1;
      for (int x = 0; x < model.card(v); ++x) {
        cumulative += model.cpt_value(v, row, x);
        if (u < cumulative) {
          drawn = x;
          break;
        }
      }
      state[static_cast<std::size_t>(v)] = drawn;
    }
    data.rows.push_back(state);
  }
  return data;
}

/// Frequency CPTs with additive smoothing alpha; parent rows with zero
/// counts fall back to uniform.
inline CausalModel estimate(const Skeleton& skeleton, const Dataset& data,
                            double alpha = 1.0) {
  if (data.rows.empty()) throw EmptyDataset("estimate: dataset is empty");
  std::map<std::string, int> column_of;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    column_of[data.columns[c]] = static_cast<int>(c);
  }
  std::vector<Cpt> cpts;
  for (const auto& var : skeleton.variables) {
    auto it = column_of.find(var.name);
    if (it == column_of.end()) {
      throw DomainMismatch("dataset misses column '" + var.name + "'");
    }
    const int col = it->second;
    const std::size_t card = var.domain.size();
    Cpt cpt;
    cpt.child = var.name;
    cpt.parent_order = skeleton.parents_of(var.name);
    std::vector<int> pa_cols;
    std::vector<int> pa_cards;
    for (const auto& p : cpt.parent_order) {
      pa_cols.push_back(column_of.at(p));
      pa_cards.push_back(
          static_cast<int>(skeleton.variable(p).domain.size()));
    }
    std::size_t rows = 1;
    for (const int c : pa_cards) rows *= static_cast<std::size_t>(c);
    std::vector<double> counts(rows * card, 0.0);
    std::vector<int> pa_values(pa_cols.size());
    for (const auto& datum : data.rows) {
      const int x = datum[static_cast<std::size_t>(col)];
      if (x < 0 || x >= static_cast<int>(card)) {
        throw DomainMismatch("dataset value out of range for '" + var.name +
                             "'");
      }
      for (std::size_t p = 0; p < pa_cols.size(); ++p) {
        pa_values[p] = datum[static_cast<std::size_t>(pa_cols[p])];
      }
      const std::size_t row = detail::mixed_radix_index(pa_values, pa_cards);
      counts[row * card + static_cast<std::size_t>(x)] += 1.0;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t x = 0; x < card; ++x) total += counts[r * card + x];
      std::vector<double> prow(card, 0.0);
      if (total == 0.0 && alpha == 0.0) {
        prow.assign(card, 1.0 / static_cast<double>(card));
      } else {
        const double denom = total + alpha * static_cast<double>(card);
        for (std::size_t x = 0; x < card; ++x) {
          prow[x] = (counts[r * card + x] + alpha) / denom;
        }
      }
      cpt.table.push_back(std::move(prow));
    }
    cpts.push_back(std::move(cpt));
  }
  return CausalModel::make(skeleton.variables, skeleton.edges, std::move(cpts),
                           skeleton.sensitive);
}

struct RandomModelOptions {
  int min_nodes = 3;
  int max_nodes = 5;
  int min_card = 2;
  int max_card = 3;
  double edge_prob = 0.5;
  int max_sensitive = 2;
  bool force_unfair_edge = false;
  // Criterion-style "zero unfair influence" construction: CPTs ignore their
  // unfair parents, and any node with unfair parents also gets a fair one.
  bool fair_cpts = false;
};

struct RandomModel {
  CausalModel model;
  std::string decision;
};

/// Seeded random DAG over nodes X0..Xn-1 (index order is topological) with
/// Dirichlet CPT rows, a random sensitive subset and the last node as the
/// decision.
inline RandomModel random_model(std::uint64_t seed,
                                const RandomModelOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node_count(opts.min_nodes, opts.max_nodes);
  const int n = node_count(rng);
  std::uniform_int_distribution<int> card_dist(opts.min_card, opts.max_card);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Variable> variables;
  for (int i = 0; i < n; ++i) {
    Variable v;
    v.name = "X" + std::to_string(i);
    const int card = card_dist(rng);
    for (int x = 0; x < card; ++x) v.domain.push_back("v" + std::to_string(x));
    variables.push_back(std::move(v));
  }

  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n),
                                     std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unit(rng) < opts.edge_prob) adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
    }
  }
  // The decision node is the last one; make sure it has a parent.
  {
    bool has_parent = false;
    for (int i = 0; i < n - 1; ++i) {
      has_parent = has_parent || adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(n - 1)];
    }
    if (!has_parent) adj[static_cast<std::size_t>(n - 2)][static_cast<std::size_t>(n - 1)] = true;
  }

  // Sensitive subset among X0..Xn-2. With fair_cpts, X0 stays fair so it can
  // serve as a fair co-parent.
  std::uniform_int_distribution<int> sens_count(1, opts.max_sensitive);
  const int k = std::min(sens_count(rng), n - 1);
  std::set<std::string> sensitive;
  std::vector<bool> is_sensitive(static_cast<std::size_t>(n), false);
  const int first_candidate = opts.fair_cpts ? 1 : 0;
  std::vector<int> candidates;
  for (int i = first_candidate; i < n - 1; ++i) candidates.push_back(i);
  for (int c = 0; c < k && !candidates.empty(); ++c) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t at = pick(rng);
    const int node = candidates[at];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(at));
    sensitive.insert(variables[static_cast<std::size_t>(node)].name);
    is_sensitive[static_cast<std::size_t>(node)] = true;
  }

  if (opts.force_unfair_edge) {
    bool found = false;
    int some_sensitive = -1;
    for (int i = 0; i < n && !found; ++i) {
      if (!is_sensitive[static_cast<std::size_t>(i)]) continue;
      some_sensitive = i;
      for (int j = i + 1; j < n; ++j) {
        found = found || adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    if (!found && some_sensitive >= 0) {
      adj[static_cast<std::size_t>(some_sensitive)][static_cast<std::size_t>(n - 1)] = true;
    }
  }
  if (opts.fair_cpts) {
    // Any node with a sensitive parent also needs a fair parent.
    for (int j = 1; j < n; ++j) {
      bool unfair = false;
      bool fair = false;
      for (int i = 0; i < j; ++i) {
        if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        if (is_sensitive[static_cast<std::size_t>(i)]) unfair = true;
        else fair = true;
      }
      if (unfair && !fair) adj[0][static_cast<std::size_t>(j)] = true;
    }
  }

  std::vector<EdgeId> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        edges.push_back({variables[static_cast<std::size_t>(i)].name,
                         variables[static_cast<std::size_t>(j)].name});
      }
    }
  }

  std::vector<Cpt> cpts;
  for (int j = 0; j < n; ++j) {
    Cpt cpt;
    cpt.child = variables[static_cast<std::size_t>(j)].name;
    std::vector<int> parents;
    std::vector<int> fair_parents;
    for (int i = 0; i < n; ++i) {
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        cpt.parent_order.push_back(variables[static_cast<std::size_t>(i)].name);
        parents.push_back(i);
        if (!is_sensitive[static_cast<std::size_t>(i)]) fair_parents.push_back(i);
      }
    }
    const std::size_t card = variables[static_cast<std::size_t>(j)].domain.size();
    std::size_t rows = 1;
    for (const int p : parents) {
      rows *= variables[static_cast<std::size_t>(p)].domain.size();
    }
    if (!opts.fair_cpts || parents.empty()) {
      for (std::size_t r = 0; r < rows; ++r) {
        cpt.table.push_back(detail::dirichlet_row(card, rng));
      }
    } else {
      // Base table over the fair parents only, tiled across unfair values.
      std::size_t fair_rows = 1;
      for (const int p : fair_parents) {
        fair_rows *= variables[static_cast<std::size_t>(p)].domain.size();
      }
      std::vector<std::vector<double>> base;
      for (std::size_t r = 0; r < fair_rows; ++r) {
        base.push_back(detail::dirichlet_row(card, rng));
      }
      std::vector<int> pa_cards;
      for (const int p : parents) {
        pa_cards.push_back(
            static_cast<int>(variables[static_cast<std::size_t>(p)].domain.size()));
      }
      std::vector<int> pa_values(parents.size());
      for (std::size_t r = 0; r < rows; ++r) {
        detail::mixed_radix_decode(r, pa_cards, pa_values);
        std::size_t fair_idx = 0;
        for (std::size_t p = 0; p < parents.size(); ++p) {
          if (is_sensitive[static_cast<std::size_t>(parents[p])]) continue;
          fair_idx = fair_idx * static_cast<std::size_t>(pa_cards[p]) +
                     static_cast<std::size_t>(pa_values[p]);
        }
        cpt.table.push_back(base[fair_idx]);
      }
    }
    cpts.push_back(std::move(cpt));
  }

  RandomModel rm{CausalModel::make(variables, edges, std::move(cpts),
                                   std::move(sensitive)),
                 variables[static_cast<std::size_t>(n - 1)].name};
  return rm;
}

// ---------------------------------------------------------------------------
// Serialization

inline EdgeId edge_from_string(const std::string& text) {
  const auto at = text.find("->");
  if (at == std::string::npos || at == 0 || at + 2 >= text.size()) {
    throw ParseError("bad edge key '" + text + "', expected 'A->V'");
  }
  return {text.substr(0, at), text.substr(at + 2)};
}

inline nlohmann::json score_spec_to_json(const ScoreSpec& spec) {
  nlohmann::json j;
  j["theta"] = nlohmann::json::object();
  for (const auto& [e, t] : spec.theta) j["theta"][e.to_string()] = t;
  j["lambda"] = nlohmann::json::object();
  for (const auto& [e, rows] : spec.lambda) j["lambda"][e.to_string()] = rows;
  if (!spec.priors.empty()) j["priors"] = spec.priors;
  return j;
}

inline ScoreSpec score_spec_from_json(const nlohmann::json& j) {
  try {
    ScoreSpec spec;
    for (const auto& [key, value] : j.at("theta").items()) {
      spec.theta[edge_from_string(key)] = value.get<double>();
    }
    for (const auto& [key, value] : j.at("lambda").items()) {
      spec.lambda[edge_from_string(key)] =
          value.get<std::vector<std::vector<double>>>();
    }
    if (j.contains("priors")) {
      spec.priors =
          j.at("priors").get<std::map<std::string, std::vector<double>>>();
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("score spec is malformed: ") + e.what());
  }
}

inline std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    if (c) out << ',';
    out << data.columns[c];
  }
  out << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  return out.str();
}

inline Dataset dataset_from_csv(const std::string& text) {
  Dataset data;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw EmptyDataset("dataset CSV is empty");
  std::stringstream header(line);
  std::string token;
  while (std::getline(header, token, ',')) data.columns.push_back(token);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row_stream(line);
    std::vector<int> row;
    while (std::getline(row_stream, token, ',')) {
      try {
        row.push_back(std::stoi(token));
      } catch (const std::exception&) {
        throw ParseError("bad dataset value '" + token + "'");
      }
    }
    if (row.size() != data.columns.size()) {
      throw ParseError("dataset row width does not match header");
    }
    data.rows.push_back(std::move(row));
  }
  if (data.rows.empty()) throw EmptyDataset("dataset CSV has no rows");
  return data;
}

}  // namespace edgefair
