#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace gridfactor {

// Library indices are 0-based. Documents and the CLI use 1-based ids:
// node id = node index + 1, line id = edge index + 1 (document order).
using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;
using EdgeSet = std::vector<EdgeIndex>;

inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

struct Edge {
  NodeIndex source = 0;
  NodeIndex target = 0;
  double susceptance = 1.0;
  double capacity = kInfiniteCapacity;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Per-node real power injections. Balanced when the entries sum to zero.
using InjectionVector = Eigen::VectorXd;

/// Signed n x m incidence matrix: +1 at each edge's source, -1 at its target.
using IncidenceMatrix = Eigen::MatrixXd;

/// Oriented graph with line parameters and nodal injections. Susceptances and
/// capacities are per-unit quantities on a common base; no units are implied.
class Network {
 public:
  Network() = default;
  Network(std::size_t node_count, std::vector<Edge> edges, NodeIndex reference,
          InjectionVector injections);
  Network(std::size_t node_count, std::vector<Edge> edges);

  [[nodiscard]] std::size_t node_count() const noexcept { return node_count_; }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const Edge& edge(EdgeIndex e) const { return edges_.at(e); }
  [[nodiscard]] NodeIndex reference() const noexcept { return reference_; }
  [[nodiscard]] const InjectionVector& injections() const noexcept { return injections_; }

  [[nodiscard]] Eigen::VectorXd susceptances() const;

  /// Copy with a different reference node.
  [[nodiscard]] Network with_reference(NodeIndex reference) const;
  /// Copy with replaced susceptances (same topology and ordering).
  [[nodiscard]] Network with_susceptances(const Eigen::VectorXd& b) const;
  [[nodiscard]] Network with_capacities(const Eigen::VectorXd& capacities) const;
  [[nodiscard]] Network with_injections(InjectionVector p) const;
  /// Network on the same nodes keeping only the edges in `kept` (in that order).
  [[nodiscard]] Network subnetwork(const EdgeSet& kept) const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  NodeIndex reference_ = 0;
  InjectionVector injections_;
};

struct ValidationFinding {
  std::string kind;  // e.g. "disconnected", "nonpositive susceptance"
  std::string message;
};

using ValidationReport = std::vector<ValidationFinding>;

/// Checks every Network invariant. An empty report means the network is valid.
[[nodiscard]] ValidationReport validate(const Network& network);

[[nodiscard]] IncidenceMatrix incidence_matrix(const Network& network);

[[nodiscard]] bool is_balanced(const InjectionVector& p);
/// Throws UnbalancedInjectionError unless `p` is balanced and sized to the network.
void require_balanced(const Network& network, const InjectionVector& p);

/// Parses and validates a canonical JSON network document.
[[nodiscard]] Network load_network_json(const nlohmann::json& document);
[[nodiscard]] Network load_network_json_text(const std::string& text);
/// Parses `edges.csv` (from,to,b,cap) and an optional `injections.csv` (node,p).
[[nodiscard]] Network load_network_csv(const std::string& edges_csv,
                                       const std::string& injections_csv = {});
/// Dispatches on the path: a `.json` file, a `.csv` edge file (with a sibling
/// `injections.csv` when present), or a directory holding those CSV files.
[[nodiscard]] Network load_network(const std::filesystem::path& path);

/// Canonical JSON document. `load_network_json(to_json(n)) == n`.
[[nodiscard]] nlohmann::json to_json(const Network& network);

}  // namespace gridfactor
