#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "gridfactor/network.hpp"

namespace testing {

using gridfactor::Edge;
using gridfactor::EdgeIndex;
using gridfactor::EdgeSet;
using gridfactor::InjectionVector;
using gridfactor::Network;
using gridfactor::NodeIndex;

inline Edge edge(std::size_t from, std::size_t to, double b = 1.0) {
  Edge e;
  e.source = from - 1;
  e.target = to - 1;
  e.susceptance = b;
  return e;
}

inline Network triangle() { return Network(3, {edge(1, 2), edge(2, 3), edge(1, 3)}); }

inline Network path3() { return Network(3, {edge(1, 2), edge(2, 3)}); }

inline Network single_edge(double b) { return Network(2, {edge(1, 2, b)}); }

// Clockwise ring 1 -> 2 -> ... -> n -> 1.
inline Network ring(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i <= n; ++i) edges.push_back(edge(i, i % n + 1));
  return Network(n, edges);
}

inline Network complete4() {
  return Network(4, {edge(1, 2), edge(1, 3), edge(1, 4), edge(2, 3), edge(2, 4), edge(3, 4)});
}

// Two triangles {1,2,3} and {4,5,7} joined by the bridge (3,7), with the
// pendant bridge (2,6).
inline Network two_blocks(std::vector<double> b = {1.0, 2.0, 1.5, 1.0, 1.0, 0.8, 1.2, 1.0}) {
  return Network(7, {edge(1, 2, b[0]), edge(2, 3, b[1]), edge(1, 3, b[2]), edge(2, 6, b[3]),
                     edge(3, 7, b[4]), edge(4, 5, b[5]), edge(5, 7, b[6]), edge(4, 7, b[7])});
}

// Bridge (1,2) glued to the triangle {2,3,4} at the cut vertex 2.
inline Network path_triangle() { return Network(4, {edge(1, 2), edge(2, 3), edge(3, 4), edge(2, 4)}); }

// Two triangles sharing node 3 (a butterfly), no bridges.
inline Network butterfly() {
  return Network(5, {edge(1, 2), edge(2, 3), edge(1, 3), edge(3, 4), edge(4, 5), edge(3, 5)});
}

struct RandomGraphOptions {
  std::size_t min_nodes = 3;
  std::size_t max_nodes = 8;
  double extra_edge_probability = 0.35;
  double b_low = 0.5;
  double b_high = 2.0;
};

// Random spanning tree plus random chords; orientation and susceptances drawn
// at random.
inline Network random_connected(std::mt19937_64& rng, const RandomGraphOptions& opts = {}) {
  std::uniform_int_distribution<std::size_t> size(opts.min_nodes, opts.max_nodes);
  const std::size_t n = size(rng);
  std::uniform_real_distribution<double> b(opts.b_low, opts.b_high);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution chord(opts.extra_edge_probability);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::set<std::pair<std::size_t, std::size_t>> present;
  std::vector<Edge> edges;
  auto add = [&](std::size_t u, std::size_t v) {
    const auto key = std::minmax(u, v);
    if (u == v || present.count(key)) return;
    present.insert(key);
    Edge e;
    e.source = coin(rng) ? u : v;
    e.target = e.source == u ? v : u;
    e.susceptance = b(rng);
    edges.push_back(e);
  };
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> parent(0, k - 1);
    add(order[k], order[parent(rng)]);
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (chord(rng)) add(u, v);
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return Network(n, edges);
}

inline InjectionVector random_balanced(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  InjectionVector p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = draw(rng);
  p.array() -= p.mean();
  return p;
}

// Breadth-first connectivity of the graph with `removed` edges deleted.
inline bool connected_without(const Network& net, const EdgeSet& removed) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (std::find(removed.begin(), removed.end(), e) != removed.end()) continue;
    adj[net.edge(e).source].push_back(net.edge(e).target);
    adj[net.edge(e).target].push_back(net.edge(e).source);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> queue{0};
  seen[0] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (auto w : adj[queue[head]]) {
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

// Exhaustive search: is there a simple path from the target of l back to its
// source that avoids l and uses l_hat? Such a path closes a simple cycle.
inline bool cycle_through_both(const Network& net, EdgeIndex l, EdgeIndex l_hat) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<std::pair<std::size_t, EdgeIndex>>> adj(n);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (e == l) continue;
    adj[net.edge(e).source].push_back({net.edge(e).target, e});
    adj[net.edge(e).target].push_back({net.edge(e).source, e});
  }
  const std::size_t start = net.edge(l).target;
  const std::size_t goal = net.edge(l).source;
  std::vector<bool> on_path(n, false);
  std::function<bool(std::size_t, bool)> walk = [&](std::size_t v, bool used) {
    if (v == goal) return used;
    on_path[v] = true;
    for (auto [w, e] : adj[v]) {
      if (!on_path[w] && walk(w, used || e == l_hat)) {
        on_path[v] = false;
        return true;
      }
    }
    on_path[v] = false;
    return false;
  };
  return walk(start, false);
}

// Is there a path from i to j that never visits `blocked`?
inline bool path_avoiding(const Network& net, NodeIndex i, NodeIndex j, NodeIndex blocked) {
  if (i == blocked || j == blocked) return false;
  const std::size_t n = net.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : net.edges()) {
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{i};
  seen[i] = true;
  seen[blocked] = true;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (v == j) return true;
    for (auto w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return false;
}

// All subsets of {0..m-1} of size 1..k.
inline std::vector<EdgeSet> subsets_up_to(std::size_t m, std::size_t k) {
  std::vector<EdgeSet> out;
  EdgeSet current;
  std::function<void(std::size_t)> grow = [&](std::size_t from) {
    if (!current.empty()) out.push_back(current);
    if (current.size() == k) return;
    for (std::size_t e = from; e < m; ++e) {
      current.push_back(e);
      grow(e + 1);
      current.pop_back();
    }
  };
  grow(0);
  return out;
}

// Relative closeness with an absolute floor.
inline bool close(double a, double b, double tol, double floor = 1.0) {
  return std::abs(a - b) <= tol * std::max({floor, std::abs(a), std::abs(b)});
}

}  // namespace testing
