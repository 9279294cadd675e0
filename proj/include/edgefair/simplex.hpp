#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace edgefair {

/// Euclidean projection onto the probability simplex (sort-based).
/// Clipped coordinates are exactly zero; the surviving coordinates are
/// re-balanced so that the float sum is exactly 1 whenever possible.
inline std::vector<double> project_to_simplex(std::vector<double> v) {
  const std::size_t n = v.size();
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  std::size_t support = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cumulative += u[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      tau = t;
      support = i + 1;
    }
  }
  (void)support;
  for (double& x : v) x = std::max(x - tau, 0.0);
  // Pin the float sum to 1 through the largest coordinate.
  double sum_others = 0.0;
  std::size_t arg_max = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > v[arg_max]) arg_max = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i != arg_max) sum_others += v[i];
  }
  v[arg_max] = 1.0 - sum_others;
  return v;
}

/// Seeded point drawn uniformly from the simplex (normalized exponentials).
inline std::vector<double> random_simplex_point(std::size_t n,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = expo(rng);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return project_to_simplex(std::move(v));
}

struct SimplexLsqResult {
  std::vector<double> weights;
  double mse = 0.0;       // mean over rows of the squared residual
  int iterations = 0;
  bool converged = false;
};

/// min_w ||Aw - t||^2 over the probability simplex via projected gradient
/// descent with a fixed 1/L step. Deterministic given the seed (random
/// simplex start). Stops when the iterate moves less than `tol` in sup norm.
inline SimplexLsqResult simplex_least_squares(
    const std::vector<std::vector<double>>& rows,
    const std::vector<double>& targets, std::uint64_t seed,
    int max_iterations = 10000, double tol = 1e-10) {
  const std::size_t n_rows = rows.size();
  const std::size_t dim = n_rows ? rows[0].size() : 0;
  SimplexLsqResult result;
  if (dim == 0) return result;
  if (dim == 1) {
    result.weights = {1.0};
    result.converged = true;
  } else {
    // Lipschitz bound for the gradient: 2 * ||A||_F^2.
    double frob = 0.0;
    for (const auto& row : rows) {
      for (const double a : row) frob += a * a;
    }
    const double step = 1.0 / std::max(2.0 * frob, 1e-12);

    std::vector<double> w = random_simplex_point(dim, seed);
    std::vector<double> grad(dim);
    std::vector<double> next;
    for (int it = 0; it < max_iterations; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t r = 0; r < n_rows; ++r) {
        double pred = 0.0;
        for (std::size_t c = 0; c < dim; ++c) pred += rows[r][c] * w[c];
        const double residual = pred - targets[r];
        for (std::size_t c = 0; c < dim; ++c) {
          grad[c] += 2.0 * residual * rows[r][c];
        }
      }
      next = w;
      for (std::size_t c = 0; c < dim; ++c) next[c] -= step * grad[c];
      next = project_to_simplex(std::move(next));
      double delta = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        delta = std::max(delta, std::abs(next[c] - w[c]));
      }
      w.swap(next);
      result.iterations = it + 1;
      if (delta < tol) {
        result.converged = true;
        break;
      }
    }
    result.weights = std::move(w);
  }
  double sse = 0.0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double pred = 0.0;
    for (std::size_t c = 0; c < result.weights.size(); ++c) {
      pred += rows[r][c] * result.weights[c];
    }
    sse += (pred - targets[r]) * (pred - targets[r]);
  }
  result.mse = n_rows ? sse / static_cast<double>(n_rows) : 0.0;
  return result;
}

}  // namespace edgefair
