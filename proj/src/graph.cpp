#include "gridfactor/graph.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "disjoint_sets.hpp"
#include "gridfactor/errors.hpp"

namespace gridfactor {

namespace {

constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();

void check_edge(const Network& network, EdgeIndex e) {
  if (e >= network.edge_count()) {
    throw UnknownEdgeError("line " + std::to_string(e + 1) + " (network has " +
                           std::to_string(network.edge_count()) + " lines)");
  }
}

}  // namespace

BlockDecomposition block_decomposition(const Network& network) {
  const std::size_t n = network.node_count();
  const std::size_t m = network.edge_count();

  std::vector<std::vector<std::pair<NodeIndex, EdgeIndex>>> adjacency(n);
  for (EdgeIndex e = 0; e < m; ++e) {
    const Edge& edge = network.edge(e);
    adjacency[edge.source].emplace_back(edge.target, e);
    adjacency[edge.target].emplace_back(edge.source, e);
  }

  std::vector<std::size_t> discovery(n, kUnvisited);
  std::vector<std::size_t> low(n, 0);
  std::vector<std::size_t> raw_block(m, kUnvisited);
  std::vector<EdgeIndex> edge_stack;
  std::size_t raw_count = 0;
  std::size_t clock = 0;

  struct Frame {
    NodeIndex node;
    EdgeIndex parent_edge;
    std::size_t next;
  };

  // Single DFS from node 0; connectivity is checked afterwards.
  std::vector<Frame> stack;
  discovery[0] = low[0] = clock++;
  stack.push_back({0, kUnvisited, 0});
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const NodeIndex v = frame.node;
    if (frame.next < adjacency[v].size()) {
      auto [w, e] = adjacency[v][frame.next++];
      if (e == frame.parent_edge) continue;
      if (discovery[w] == kUnvisited) {
        edge_stack.push_back(e);
        discovery[w] = low[w] = clock++;
        stack.push_back({w, e, 0});
      } else if (discovery[w] < discovery[v]) {
        edge_stack.push_back(e);
        low[v] = std::min(low[v], discovery[w]);
      }
      continue;
    }
    const EdgeIndex parent_edge = frame.parent_edge;
    stack.pop_back();
    if (stack.empty()) break;
    const NodeIndex u = stack.back().node;
    low[u] = std::min(low[u], low[v]);
    if (low[v] >= discovery[u]) {
      // u separates the subtree of v: pop one block ending at the tree edge (u, v).
      while (true) {
        EdgeIndex top = edge_stack.back();
        edge_stack.pop_back();
        raw_block[top] = raw_count;
        if (top == parent_edge) break;
      }
      ++raw_count;
    }
  }

  if (std::any_of(discovery.begin(), discovery.end(), [](std::size_t d) { return d == kUnvisited; })) {
    throw DisconnectedError("block decomposition requires a connected graph");
  }

  // Relabel blocks in order of first edge appearance.
  BlockDecomposition result;
  result.block_of.assign(m, 0);
  std::vector<std::size_t> relabel(raw_count, kUnvisited);
  for (EdgeIndex e = 0; e < m; ++e) {
    std::size_t& label = relabel[raw_block[e]];
    if (label == kUnvisited) {
      label = result.blocks.size();
      result.blocks.emplace_back();
    }
    result.block_of[e] = label;
    result.blocks[label].push_back(e);
  }

  std::vector<std::vector<std::size_t>> node_blocks(n);
  for (EdgeIndex e = 0; e < m; ++e) {
    const Edge& edge = network.edge(e);
    for (NodeIndex v : {edge.source, edge.target}) {
      auto& list = node_blocks[v];
      if (std::find(list.begin(), list.end(), result.block_of[e]) == list.end()) {
        list.push_back(result.block_of[e]);
      }
    }
  }
  for (NodeIndex v = 0; v < n; ++v) {
    if (node_blocks[v].size() >= 2) result.cut_vertices.push_back(v);
  }
  for (const EdgeSet& block : result.blocks) {
    if (block.size() == 1) result.bridges.push_back(block.front());
  }
  std::sort(result.bridges.begin(), result.bridges.end());
  return result;
}

bool is_cut_set(const Network& network, const EdgeSet& outage) {
  std::vector<bool> kept(network.edge_count(), true);
  for (EdgeIndex e : outage) {
    check_edge(network, e);
    kept[e] = false;
  }
  detail::DisjointSets sets(network.node_count());
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    if (kept[e]) sets.unite(network.edge(e).source, network.edge(e).target);
  }
  return sets.components() > 1;
}

bool shares_simple_cycle(const Network& network, const BlockDecomposition& blocks, EdgeIndex l,
                         EdgeIndex l_hat) {
  check_edge(network, l);
  check_edge(network, l_hat);
  return l != l_hat && blocks.block_of[l] == blocks.block_of[l_hat] && !blocks.is_bridge(l);
}

bool shares_simple_cycle(const Network& network, EdgeIndex l, EdgeIndex l_hat) {
  return shares_simple_cycle(network, block_decomposition(network), l, l_hat);
}

std::vector<std::size_t> component_labels(const Network& network, const std::vector<bool>& kept) {
  detail::DisjointSets sets(network.node_count());
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    if (kept[e]) sets.unite(network.edge(e).source, network.edge(e).target);
  }
  std::vector<std::size_t> labels(network.node_count());
  std::vector<std::size_t> root_label(network.node_count(), kUnvisited);
  std::size_t next = 0;
  for (NodeIndex v = 0; v < network.node_count(); ++v) {
    std::size_t& label = root_label[sets.find(v)];
    if (label == kUnvisited) label = next++;
    labels[v] = label;
  }
  return labels;
}

}  // namespace gridfactor
