#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "capcon/rng.hpp"

namespace capcon {

class UndefinedDiameterError : public std::runtime_error {
 public:
  UndefinedDiameterError()
      : std::runtime_error("diameter undefined: digraph is not strongly connected") {}
};

class GraphGenerationError : public std::runtime_error {
 public:
  explicit GraphGenerationError(const std::string& what) : std::runtime_error(what) {}
};

// Static directed communication topology. A stored edge (j, i) means node i
// transmits to node j. Node ids are 1-based on the public surface (edge
// lists, DOT, CSV); the adjacency views used by the protocol kernels are
// 0-based. Immutable after construction, so instances can be shared across
// concurrent workers without coordination.
class Digraph {
 public:
  Digraph(int node_count, std::vector<std::pair<int, int>> edges)
      : n_(node_count), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("Digraph: node_count must be positive");
    in_.resize(static_cast<std::size_t>(n_));
    out_.resize(static_cast<std::size_t>(n_));
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges_.size() * 2);
    for (const auto& [recv, send] : edges_) {
      if (recv < 1 || recv > n_ || send < 1 || send > n_)
        throw std::invalid_argument("Digraph: node index out of range [1, node_count]");
      if (recv == send)
        throw std::invalid_argument("Digraph: self-edges are not stored");
      if (!seen.insert(pair_key(recv, send)).second)
        throw std::invalid_argument("Digraph: duplicate edge");
      in_[static_cast<std::size_t>(recv - 1)].push_back(send - 1);
      out_[static_cast<std::size_t>(send - 1)].push_back(recv - 1);
    }
    // Sorted adjacency gives every consumer one canonical iteration order,
    // independent of the order edges were listed in.
    for (auto& v : in_) std::sort(v.begin(), v.end());
    for (auto& v : out_) std::sort(v.begin(), v.end());
  }

  int node_count() const { return n_; }

  // Stored (receiver, sender) pairs, 1-based, in construction order.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // 0-based adjacency: in_adj(v) lists the senders node v hears from.
  const std::vector<int>& in_adj(int v) const { return in_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& out_adj(int v) const { return out_[static_cast<std::size_t>(v)]; }
  int out_degree(int v) const { return static_cast<int>(out_[static_cast<std::size_t>(v)].size()); }
  int in_degree(int v) const { return static_cast<int>(in_[static_cast<std::size_t>(v)].size()); }

  bool has_edge(int recv, int send) const {
    const auto& a = out_[static_cast<std::size_t>(send - 1)];
    return std::binary_search(a.begin(), a.end(), recv - 1);
  }

 private:
  std::uint64_t pair_key(int r, int s) const {
    return static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(n_ + 1) +
           static_cast<std::uint64_t>(s);
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

// Column-stochastic protocol weights: column j holds 1/(1 + out-degree of j)
// on its out-neighbors and on the diagonal, zero elsewhere.
class WeightMatrix {
 public:
  static WeightMatrix from_out_degrees(const Digraph& g) {
    WeightMatrix w;
    const int n = g.node_count();
    w.value_.resize(static_cast<std::size_t>(n));
    w.rows_.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      w.value_[static_cast<std::size_t>(j)] = 1.0 / (1.0 + g.out_degree(j));
      auto& rows = w.rows_[static_cast<std::size_t>(j)];
      rows = g.out_adj(j);
      rows.insert(std::lower_bound(rows.begin(), rows.end(), j), j);
    }
    return w;
  }

  int size() const { return static_cast<int>(value_.size()); }

  // Shared weight of every nonzero entry in column `col` (diagonal included).
  double column_value(int col) const { return value_[static_cast<std::size_t>(col)]; }

  // Nonzero rows of column `col`: out-neighbors of col plus col itself, sorted.
  const std::vector<int>& column_rows(int col) const { return rows_[static_cast<std::size_t>(col)]; }

  double entry(int row, int col) const {
    const auto& rows = rows_[static_cast<std::size_t>(col)];
    return std::binary_search(rows.begin(), rows.end(), row)
               ? value_[static_cast<std::size_t>(col)]
               : 0.0;
  }

  double column_sum(int col) const {
    return value_[static_cast<std::size_t>(col)] *
           static_cast<double>(rows_[static_cast<std::size_t>(col)].size());
  }

 private:
  std::vector<double> value_;
  std::vector<std::vector<int>> rows_;
};

inline WeightMatrix build_weights(const Digraph& g) {
  return WeightMatrix::from_out_degrees(g);
}

namespace detail {

// Forward BFS over the chosen adjacency; returns number of reached nodes.
inline int bfs_reach_count(const Digraph& g, int source,
                           const std::vector<int>& (Digraph::*adj)(int) const) {
  const int n = g.node_count();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(n));
  queue.push_back(source);
  seen[static_cast<std::size_t>(source)] = 1;
  int count = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (int next : (g.*adj)(queue[head])) {
      if (!seen[static_cast<std::size_t>(next)]) {
        seen[static_cast<std::size_t>(next)] = 1;
        queue.push_back(next);
        ++count;
      }
    }
  }
  return count;
}

}  // namespace detail

// True iff a directed path exists between every ordered pair of nodes.
inline bool is_strongly_connected(const Digraph& g) {
  const int n = g.node_count();
  if (n == 1) return true;
  return detail::bfs_reach_count(g, 0, &Digraph::out_adj) == n &&
         detail::bfs_reach_count(g, 0, &Digraph::in_adj) == n;
}

namespace detail {

// Eccentricity of `source` by plain BFS. Returns nullopt when some node is
// unreachable.
inline std::optional<int> bfs_eccentricity(const Digraph& g, int source) {
  const int n = g.node_count();
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(n));
  queue.push_back(source);
  dist[static_cast<std::size_t>(source)] = 0;
  int reached = 1;
  int ecc = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v : g.out_adj(u)) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        ecc = dist[static_cast<std::size_t>(v)];
        queue.push_back(v);
        ++reached;
      }
    }
  }
  if (reached != n) return std::nullopt;
  return ecc;
}

// Eccentricities for large graphs: per-source frontier expansion over packed
// adjacency bitsets. Data-center graphs have tiny diameter, so each source
// finishes after a couple of levels.
inline std::optional<int> bitset_eccentricity(const std::vector<std::uint64_t>& adj_bits,
                                              int n, int words, int source) {
  std::vector<std::uint64_t> visited(static_cast<std::size_t>(words), 0);
  std::vector<int> frontier{source};
  visited[static_cast<std::size_t>(source >> 6)] |= 1ULL << (source & 63);
  int covered = 1;
  int depth = 0;
  std::vector<std::uint64_t> next(static_cast<std::size_t>(words));
  while (covered < n) {
    std::fill(next.begin(), next.end(), 0);
    for (int u : frontier) {
      const std::uint64_t* row = adj_bits.data() + static_cast<std::size_t>(u) * words;
      for (int w = 0; w < words; ++w) next[static_cast<std::size_t>(w)] |= row[w];
    }
    frontier.clear();
    for (int w = 0; w < words; ++w) {
      std::uint64_t fresh = next[static_cast<std::size_t>(w)] & ~visited[static_cast<std::size_t>(w)];
      visited[static_cast<std::size_t>(w)] |= fresh;
      while (fresh) {
        const int bit = __builtin_ctzll(fresh);
        fresh &= fresh - 1;
        frontier.push_back((w << 6) + bit);
        ++covered;
      }
    }
    if (frontier.empty()) return std::nullopt;
    ++depth;
  }
  return depth;
}

}  // namespace detail

// Longest shortest directed path over all ordered node pairs.
// Throws UndefinedDiameterError when the graph is not strongly connected.
inline int diameter(const Digraph& g) {
  const int n = g.node_count();
  if (n == 1) return 0;
  if (n <= 512) {
    int best = 0;
    for (int s = 0; s < n; ++s) {
      auto ecc = detail::bfs_eccentricity(g, s);
      if (!ecc) throw UndefinedDiameterError();
      best = std::max(best, *ecc);
    }
    return best;
  }
  const int words = (n + 63) / 64;
  std::vector<std::uint64_t> adj_bits(static_cast<std::size_t>(n) * words, 0);
  for (int u = 0; u < n; ++u) {
    std::uint64_t* row = adj_bits.data() + static_cast<std::size_t>(u) * words;
    for (int v : g.out_adj(u)) row[v >> 6] |= 1ULL << (v & 63);
  }
  int best = 0;
  for (int s = 0; s < n; ++s) {
    auto ecc = detail::bitset_eccentricity(adj_bits, n, words, s);
    if (!ecc) throw UndefinedDiameterError();
    best = std::max(best, *ecc);
  }
  return best;
}

namespace detail {

// Membership structure for candidate edges during generation: flat bitmap for
// moderate n, hash set beyond that.
class EdgeSet {
 public:
  explicit EdgeSet(int n) : n_(n) {
    if (static_cast<std::uint64_t>(n) * n <= (1ULL << 31))
      bitmap_.resize((static_cast<std::uint64_t>(n) * n + 63) / 64, 0);
  }

  bool insert(int send, int recv) {
    const std::uint64_t k =
        static_cast<std::uint64_t>(send) * static_cast<std::uint64_t>(n_) +
        static_cast<std::uint64_t>(recv);
    if (!bitmap_.empty()) {
      std::uint64_t& word = bitmap_[k >> 6];
      const std::uint64_t bit = 1ULL << (k & 63);
      if (word & bit) return false;
      word |= bit;
      return true;
    }
    return set_.insert(k).second;
  }

 private:
  int n_;
  std::vector<std::uint64_t> bitmap_;
  std::unordered_set<std::uint64_t> set_;
};

}  // namespace detail

// Random strongly connected digraph, a pure function of its arguments.
// A random directed Hamiltonian cycle guarantees strong connectivity, then
// independent random edges are added until the requested density is reached.
// When target_diameter_max is set, extra chords are added and the diameter
// re-measured, up to 100 attempts.
inline Digraph generate_random_digraph(int n, double edge_density,
                                       std::optional<int> target_diameter_max,
                                       std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_random_digraph: n must be >= 2");
  if (!(edge_density > 0.0) || edge_density > 1.0)
    throw std::invalid_argument("generate_random_digraph: edge_density must be in (0, 1]");

  SplitMix rng(mix_seed(seed, {static_cast<std::uint64_t>(n), 0x67656e /* gen */}));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  detail::EdgeSet seen(n);
  std::vector<std::pair<int, int>> edges;  // (receiver, sender), 1-based
  auto add_edge = [&](int send0, int recv0) {
    if (send0 == recv0) return false;
    if (!seen.insert(send0, recv0)) return false;
    edges.emplace_back(recv0 + 1, send0 + 1);
    return true;
  };

  for (int i = 0; i < n; ++i)
    add_edge(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>((i + 1) % n)]);

  const std::uint64_t max_edges = static_cast<std::uint64_t>(n) * (n - 1);
  std::uint64_t target = static_cast<std::uint64_t>(
      edge_density * static_cast<double>(max_edges) + 0.5);
  target = std::min(std::max<std::uint64_t>(target, static_cast<std::uint64_t>(n)), max_edges);

  auto fill_to = [&](std::uint64_t count) {
    while (edges.size() < count) {
      const int s = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      const int r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      add_edge(s, r);
    }
  };
  fill_to(target);

  Digraph g(n, edges);
  if (target_diameter_max) {
    const int bound = *target_diameter_max;
    if (bound < 1)
      throw std::invalid_argument("generate_random_digraph: target_diameter_max must be >= 1");
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (diameter(g) <= bound) return g;
      if (edges.size() == max_edges)
        throw GraphGenerationError("generate_random_digraph: complete digraph still exceeds bound");
      const std::uint64_t grow = std::max<std::uint64_t>(
          static_cast<std::uint64_t>(n), edges.size() / 8);
      fill_to(std::min(max_edges, edges.size() + grow));
      g = Digraph(n, edges);
    }
    if (diameter(g) > bound)
      throw GraphGenerationError(
          "generate_random_digraph: diameter bound not met after 100 attempts");
  }
  return g;
}

}  // namespace capcon
