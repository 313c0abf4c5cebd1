#ifndef RSSMM_TESTS_GRAPH_ORACLES_HPP
#define RSSMM_TESTS_GRAPH_ORACLES_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline constexpr int kUnreachable = std::numeric_limits<int>::max() / 4;

/// Floyd-Warshall hop counts over an undirected adjacency list.
inline std::vector<std::vector<int>> all_pairs_hops(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int j : adj[i]) {
      d[i][static_cast<std::size_t>(j)] = std::min(d[i][static_cast<std::size_t>(j)], 1);
      d[static_cast<std::size_t>(j)][i] = std::min(d[static_cast<std::size_t>(j)][i], 1);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

/// Random connected-or-not graph: each unordered pair linked with probability p.
template <class Rng>
std::vector<std::vector<int>> random_adjacency(int n, double p, Rng& rng) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (u(rng) < p) {
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  return adj;
}

/**
 * Exhaustive maximum of (prefix + obs) + trans over every node sequence of
 * length T whose consecutive pairs satisfy allowed(i, j). Returns -inf when
 * no sequence is allowed.
 */
template <class Obs, class Allowed, class Trans>
double enumerate_best(int n, int slots, Obs&& obs, Allowed&& allowed, Trans&& trans) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> seq(static_cast<std::size_t>(slots), 0);
  while (true) {
    bool ok = true;
    double s = obs(0, seq[0]);
    for (int t = 1; t < slots && ok; ++t) {
      if (!allowed(seq[t - 1], seq[t])) {
        ok = false;
        break;
      }
      s = (s + obs(t, seq[t])) + trans(t, seq[t - 1], seq[t]);
    }
    if (ok && s > best) best = s;
    int k = slots - 1;
    while (k >= 0 && ++seq[static_cast<std::size_t>(k)] == n) {
      seq[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return best;
}

}  // namespace oracle

#endif  // RSSMM_TESTS_GRAPH_ORACLES_HPP
