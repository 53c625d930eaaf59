#pragma once

#include <cstddef>
#include <vector>

#include "gridfactor/network.hpp"

namespace gridfactor {

/// Partition of the edges into blocks (maximal 2-connected pieces). Two
/// distinct edges share a block iff some simple cycle passes through both.
struct BlockDecomposition {
  std::vector<EdgeSet> blocks;        // ordered by first edge appearance
  EdgeSet bridges;                    // ascending
  std::vector<NodeIndex> cut_vertices;  // ascending
  std::vector<std::size_t> block_of;  // edge -> block index

  [[nodiscard]] bool is_bridge(EdgeIndex e) const { return blocks.at(block_of.at(e)).size() == 1; }
  [[nodiscard]] std::size_t block_count() const noexcept { return blocks.size(); }
};

/// Linear-time biconnected components (iterative Tarjan edge-stack DFS).
/// Throws DisconnectedError when the graph is not connected.
[[nodiscard]] BlockDecomposition block_decomposition(const Network& network);

/// True iff removing `outage` disconnects the graph. Throws UnknownEdgeError.
[[nodiscard]] bool is_cut_set(const Network& network, const EdgeSet& outage);

/// True iff some simple cycle contains both `l` and `l_hat` (l != l_hat).
[[nodiscard]] bool shares_simple_cycle(const Network& network, const BlockDecomposition& blocks,
                                       EdgeIndex l, EdgeIndex l_hat);
[[nodiscard]] bool shares_simple_cycle(const Network& network, EdgeIndex l, EdgeIndex l_hat);

/// Connected components of the graph restricted to `kept` edges; returns the
/// component label per node.
[[nodiscard]] std::vector<std::size_t> component_labels(const Network& network,
                                                        const std::vector<bool>& kept);

}  // namespace gridfactor
