#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "gridfactor/network.hpp"

namespace gridfactor {

using Rational = boost::multiprecision::cpp_rational;

enum class ForestKind { spanning_trees, two_tree_forests };

/// An enumerated set of spanning trees or two-tree spanning forests. Members
/// are ascending edge lists in lexicographic order; weight_sum is the sum over
/// members of the product of their susceptances.
struct ForestFamily {
  ForestKind kind = ForestKind::spanning_trees;
  std::vector<EdgeSet> members;
  double weight_sum = 0.0;
  std::optional<Rational> exact_weight_sum;
};

struct EnumerationLimits {
  std::size_t max_nodes = 14;
  std::size_t max_members = 10'000'000;
};

struct EffectiveReactance {
  double reactance = 0.0;            // X = 1/B of the line itself
  double effective = 0.0;            // R, seen between the line's endpoints
  double reduction_ratio = 0.0;      // trees avoiding the line / all trees
  double reactance_reduction = 0.0;  // X - R = X * reduction_ratio
};

struct IdentityCheck {
  std::string label;
  double algebraic = 0.0;
  double forest = 0.0;
  bool passed = false;
};

struct MatrixTreeReport {
  std::vector<IdentityCheck> checks;
  bool exact = false;
  [[nodiscard]] bool passed() const;
};

/// Best rational p/q with |p|, q <= bound that reproduces `value` to within a
/// couple of ulps, if one exists.
[[nodiscard]] std::optional<Rational> rationalize(double value, std::int64_t bound = 1'000'000);

/// Brute-force spanning tree / two-tree forest enumeration and the forest
/// expressions for A, PTDF, LODF and effective reactance. Enumerations are
/// computed lazily and cached; instances are not thread-safe.
///
/// When `exact` is requested and every susceptance is a ratio of integers
/// bounded by 1e6, weights are summed in exact rational arithmetic and the
/// ratios are rounded once at the end.
class ForestOracle {
 public:
  explicit ForestOracle(Network network, bool exact = false, EnumerationLimits limits = {});

  [[nodiscard]] const Network& network() const noexcept { return network_; }
  [[nodiscard]] bool exact() const noexcept { return exact_; }

  /// All spanning trees using only `allowed` edges.
  [[nodiscard]] ForestFamily spanning_trees(const EdgeSet& allowed);
  [[nodiscard]] ForestFamily spanning_trees();
  /// Spanning forests of exactly two trees, one containing `n1`, the other `n2`.
  [[nodiscard]] ForestFamily two_tree_forests(const std::vector<NodeIndex>& n1,
                                              const std::vector<NodeIndex>& n2);

  /// Sum of tree weights avoiding `excluded`.
  [[nodiscard]] Rational tree_weight_exact(const EdgeSet& excluded = {});
  [[nodiscard]] double tree_weight(const EdgeSet& excluded = {});
  [[nodiscard]] double two_tree_weight(const std::vector<NodeIndex>& n1,
                                       const std::vector<NodeIndex>& n2);
  [[nodiscard]] Rational two_tree_weight_exact(const std::vector<NodeIndex>& n1,
                                               const std::vector<NodeIndex>& n2);

  /// A_ij as (weight of T(ij, reference)) / (weight of all trees).
  [[nodiscard]] double a_entry(NodeIndex i, NodeIndex j);
  /// D_{l, i_hat j_hat} via two-tree forests.
  [[nodiscard]] double ptdf(EdgeIndex l, NodeIndex i_hat, NodeIndex j_hat);
  /// K_{l l_hat} via two-tree forests; BridgeOutageError when l_hat is a bridge.
  [[nodiscard]] double lodf(EdgeIndex l, EdgeIndex l_hat);
  [[nodiscard]] EffectiveReactance effective_reactance(EdgeIndex e);

 private:
  struct TwoForest {
    EdgeSet edges;
    std::uint64_t side = 0;  // nodes in the tree that holds the lowest node
    double weight = 0.0;
    Rational exact;
  };
  struct Tree {
    EdgeSet edges;
    double weight = 0.0;
    Rational exact;
  };

  const std::vector<Tree>& trees();
  const std::vector<TwoForest>& two_forests();
  bool separates(const TwoForest& forest, std::uint64_t n1, std::uint64_t n2) const;
  std::uint64_t mask(const std::vector<NodeIndex>& nodes) const;
  void check_edge(EdgeIndex e) const;
  void check_node(NodeIndex v) const;

  Network network_;
  bool exact_ = false;
  EnumerationLimits limits_;
  std::vector<Rational> exact_b_;
  std::optional<std::vector<Tree>> trees_;
  std::optional<std::vector<TwoForest>> two_forests_;
};

/// Convenience wrappers that build a one-shot oracle.
[[nodiscard]] ForestFamily enumerate_spanning_trees(const Network& network, const EdgeSet& allowed);
[[nodiscard]] ForestFamily enumerate_two_tree_forests(const Network& network,
                                                      const std::vector<NodeIndex>& n1,
                                                      const std::vector<NodeIndex>& n2);
[[nodiscard]] double a_entry_via_forests(const Network& network, NodeIndex i, NodeIndex j);
[[nodiscard]] double ptdf_via_forests(const Network& network, EdgeIndex l, NodeIndex i_hat,
                                      NodeIndex j_hat);
[[nodiscard]] double lodf_via_forests(const Network& network, EdgeIndex l, EdgeIndex l_hat);
[[nodiscard]] EffectiveReactance effective_reactance(const Network& network, EdgeIndex e);

/// Compares det(reduced L) with the total tree weight, and every first minor
/// with the signed weight of T(ij, reference). Passes iff every comparison is
/// within `tolerance` relative.
[[nodiscard]] MatrixTreeReport matrix_tree_check(ForestOracle& oracle, double tolerance = 1e-9);
[[nodiscard]] MatrixTreeReport matrix_tree_check(const Network& network, double tolerance = 1e-9);

}  // namespace gridfactor
