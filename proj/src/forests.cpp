#include "gridfactor/forests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "disjoint_sets.hpp"
#include "gridfactor/dcpf.hpp"
#include "gridfactor/errors.hpp"

namespace gridfactor {

namespace {

double to_double(const Rational& num, const Rational& den) { return static_cast<double>(Rational(num / den)); }

// Union-find with undo (no path compression) for backtracking.
class UndoableSets {
 public:
  explicit UndoableSets(std::size_t n) : parent_(n), size_(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }

  [[nodiscard]] std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    history_.push_back(b);
    return true;
  }

  void undo() {
    std::size_t b = history_.back();
    history_.pop_back();
    size_[parent_[b]] -= size_[b];
    parent_[b] = b;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> history_;
};

// Enumerates every acyclic subset of `candidates` with exactly `k` edges, in
// lexicographic order. Such a subset is a spanning forest with n - k trees.
template <typename Emit>
void enumerate_forests(const Network& network, const EdgeSet& candidates, std::size_t k,
                       std::size_t max_members, Emit&& emit) {
  const std::size_t n = network.node_count();
  UndoableSets sets(n);
  EdgeSet chosen;
  std::size_t emitted = 0;

  auto reachable_components = [&](std::size_t from) {
    detail::DisjointSets probe(n);
    for (EdgeIndex e : chosen) probe.unite(network.edge(e).source, network.edge(e).target);
    for (std::size_t idx = from; idx < candidates.size(); ++idx) {
      probe.unite(network.edge(candidates[idx]).source, network.edge(candidates[idx]).target);
    }
    return probe.components();
  };

  auto recurse = [&](auto& self, std::size_t idx) -> void {
    if (chosen.size() == k) {
      if (++emitted > max_members) {
        throw TooLargeError("more than " + std::to_string(max_members) + " forests");
      }
      emit(chosen, sets);
      return;
    }
    if (candidates.size() - idx < k - chosen.size()) return;
    // Adding edges only merges trees, so a forest with n - k trees must be
    // reachable from chosen plus everything still available.
    if (reachable_components(idx) > n - k) return;

    const Edge& edge = network.edge(candidates[idx]);
    if (sets.unite(edge.source, edge.target)) {
      chosen.push_back(candidates[idx]);
      self(self, idx + 1);
      chosen.pop_back();
      sets.undo();
    }
    self(self, idx + 1);
  };
  if (k <= n) recurse(recurse, 0);
}

}  // namespace

bool MatrixTreeReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.passed; });
}

std::optional<Rational> rationalize(double value, std::int64_t bound) {
  if (!std::isfinite(value)) return std::nullopt;
  const bool negative = value < 0;
  const double x = std::abs(value);
  // Continued-fraction convergents h/k.
  std::int64_t h_prev = 1, h = static_cast<std::int64_t>(std::floor(x));
  std::int64_t k_prev = 0, k = 1;
  double rest = x - std::floor(x);
  if (h > bound) return std::nullopt;
  for (int iter = 0; iter < 64; ++iter) {
    const double approx = static_cast<double>(h) / static_cast<double>(k);
    if (std::abs(approx - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(x, 1e-300)) {
      Rational r(h, k);
      return negative ? Rational(-r) : r;
    }
    if (rest <= 0.0) break;
    const double inv = 1.0 / rest;
    const auto a = static_cast<std::int64_t>(std::floor(inv));
    rest = inv - std::floor(inv);
    if (a > bound) break;
    const std::int64_t h_next = a * h + h_prev;
    const std::int64_t k_next = a * k + k_prev;
    if (h_next > bound || k_next > bound) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
  return std::nullopt;
}

ForestOracle::ForestOracle(Network network, bool exact, EnumerationLimits limits)
    : network_(std::move(network)), limits_(limits) {
  if (network_.node_count() > 64) {
    throw TooLargeError("forest enumeration supports at most 64 nodes");
  }
  if (network_.node_count() > limits_.max_nodes) {
    // Unit-weight reduced Laplacian determinant counts the spanning trees.
    Network unit = network_.with_susceptances(Eigen::VectorXd::Ones(
        static_cast<Eigen::Index>(network_.edge_count())));
    const double count = LaplacianBundle(unit).reduced_determinant();
    if (count > static_cast<double>(limits_.max_members)) {
      throw TooLargeError(std::to_string(network_.node_count()) + " nodes and about " +
                          std::to_string(count) + " spanning trees");
    }
  }
  if (exact) {
    exact_ = true;
    for (const Edge& edge : network_.edges()) {
      auto r = rationalize(edge.susceptance);
      if (!r) {
        exact_ = false;
        exact_b_.clear();
        break;
      }
      exact_b_.push_back(*r);
    }
  }
}

void ForestOracle::check_edge(EdgeIndex e) const {
  if (e >= network_.edge_count()) throw UnknownEdgeError("line " + std::to_string(e + 1));
}

void ForestOracle::check_node(NodeIndex v) const {
  if (v >= network_.node_count()) throw std::out_of_range("node " + std::to_string(v + 1));
}

const std::vector<ForestOracle::Tree>& ForestOracle::trees() {
  if (!trees_) {
    std::vector<Tree> result;
    EdgeSet all(network_.edge_count());
    for (EdgeIndex e = 0; e < all.size(); ++e) all[e] = e;
    enumerate_forests(network_, all, network_.node_count() - 1, limits_.max_members,
                      [&](const EdgeSet& edges, const UndoableSets&) {
                        Tree tree{edges, 1.0, Rational(1)};
                        for (EdgeIndex e : edges) {
                          tree.weight *= network_.edge(e).susceptance;
                          if (exact_) tree.exact *= exact_b_[e];
                        }
                        result.push_back(std::move(tree));
                      });
    trees_ = std::move(result);
  }
  return *trees_;
}

const std::vector<ForestOracle::TwoForest>& ForestOracle::two_forests() {
  if (!two_forests_) {
    std::vector<TwoForest> result;
    EdgeSet all(network_.edge_count());
    for (EdgeIndex e = 0; e < all.size(); ++e) all[e] = e;
    const std::size_t n = network_.node_count();
    enumerate_forests(network_, all, n - 2, limits_.max_members,
                      [&](const EdgeSet& edges, const UndoableSets& sets) {
                        TwoForest forest{edges, 0, 1.0, Rational(1)};
                        const std::size_t root = sets.find(0);
                        for (NodeIndex v = 0; v < n; ++v) {
                          if (sets.find(v) == root) forest.side |= std::uint64_t{1} << v;
                        }
                        for (EdgeIndex e : edges) {
                          forest.weight *= network_.edge(e).susceptance;
                          if (exact_) forest.exact *= exact_b_[e];
                        }
                        result.push_back(std::move(forest));
                      });
    two_forests_ = std::move(result);
  }
  return *two_forests_;
}

std::uint64_t ForestOracle::mask(const std::vector<NodeIndex>& nodes) const {
  std::uint64_t bits = 0;
  for (NodeIndex v : nodes) {
    check_node(v);
    bits |= std::uint64_t{1} << v;
  }
  return bits;
}

bool ForestOracle::separates(const TwoForest& forest, std::uint64_t n1, std::uint64_t n2) const {
  if (n1 == 0 || n2 == 0 || (n1 & n2) != 0) return false;
  const std::uint64_t side = forest.side;
  const bool n1_in = (n1 & side) == n1, n1_out = (n1 & side) == 0;
  const bool n2_in = (n2 & side) == n2, n2_out = (n2 & side) == 0;
  return (n1_in && n2_out) || (n1_out && n2_in);
}

ForestFamily ForestOracle::spanning_trees(const EdgeSet& allowed) {
  for (EdgeIndex e : allowed) check_edge(e);
  EdgeSet candidates = allowed;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  ForestFamily family;
  family.kind = ForestKind::spanning_trees;
  Rational exact_sum = 0;
  enumerate_forests(network_, candidates, network_.node_count() - 1, limits_.max_members,
                    [&](const EdgeSet& edges, const UndoableSets&) {
                      double weight = 1.0;
                      Rational exact_weight = 1;
                      for (EdgeIndex e : edges) {
                        weight *= network_.edge(e).susceptance;
                        if (exact_) exact_weight *= exact_b_[e];
                      }
                      family.weight_sum += weight;
                      if (exact_) exact_sum += exact_weight;
                      family.members.push_back(edges);
                    });
  std::sort(family.members.begin(), family.members.end());
  if (exact_) family.exact_weight_sum = exact_sum;
  return family;
}

ForestFamily ForestOracle::spanning_trees() {
  EdgeSet all(network_.edge_count());
  for (EdgeIndex e = 0; e < all.size(); ++e) all[e] = e;
  return spanning_trees(all);
}

ForestFamily ForestOracle::two_tree_forests(const std::vector<NodeIndex>& n1,
                                            const std::vector<NodeIndex>& n2) {
  const std::uint64_t m1 = mask(n1), m2 = mask(n2);
  ForestFamily family;
  family.kind = ForestKind::two_tree_forests;
  Rational exact_sum = 0;
  for (const TwoForest& forest : two_forests()) {
    if (!separates(forest, m1, m2)) continue;
    family.members.push_back(forest.edges);
    family.weight_sum += forest.weight;
    if (exact_) exact_sum += forest.exact;
  }
  std::sort(family.members.begin(), family.members.end());
  if (exact_) family.exact_weight_sum = exact_sum;
  return family;
}

Rational ForestOracle::tree_weight_exact(const EdgeSet& excluded) {
  Rational sum = 0;
  for (const Tree& tree : trees()) {
    bool avoids = std::none_of(excluded.begin(), excluded.end(), [&](EdgeIndex e) {
      return std::binary_search(tree.edges.begin(), tree.edges.end(), e);
    });
    if (avoids) sum += tree.exact;
  }
  return sum;
}

double ForestOracle::tree_weight(const EdgeSet& excluded) {
  double sum = 0.0;
  for (const Tree& tree : trees()) {
    bool avoids = std::none_of(excluded.begin(), excluded.end(), [&](EdgeIndex e) {
      return std::binary_search(tree.edges.begin(), tree.edges.end(), e);
    });
    if (avoids) sum += tree.weight;
  }
  return sum;
}

double ForestOracle::two_tree_weight(const std::vector<NodeIndex>& n1,
                                     const std::vector<NodeIndex>& n2) {
  const std::uint64_t m1 = mask(n1), m2 = mask(n2);
  double sum = 0.0;
  for (const TwoForest& forest : two_forests()) {
    if (separates(forest, m1, m2)) sum += forest.weight;
  }
  return sum;
}

Rational ForestOracle::two_tree_weight_exact(const std::vector<NodeIndex>& n1,
                                             const std::vector<NodeIndex>& n2) {
  const std::uint64_t m1 = mask(n1), m2 = mask(n2);
  Rational sum = 0;
  for (const TwoForest& forest : two_forests()) {
    if (separates(forest, m1, m2)) sum += forest.exact;
  }
  return sum;
}

double ForestOracle::a_entry(NodeIndex i, NodeIndex j) {
  check_node(i);
  check_node(j);
  const NodeIndex ref = network_.reference();
  if (i == ref || j == ref) return 0.0;
  std::vector<NodeIndex> n1 = i == j ? std::vector<NodeIndex>{i} : std::vector<NodeIndex>{i, j};
  if (exact_) return to_double(two_tree_weight_exact(n1, {ref}), tree_weight_exact());
  return two_tree_weight(n1, {ref}) / tree_weight();
}

double ForestOracle::ptdf(EdgeIndex l, NodeIndex i_hat, NodeIndex j_hat) {
  check_edge(l);
  const Edge& edge = network_.edge(l);
  auto set = [](NodeIndex a, NodeIndex b) {
    return a == b ? std::vector<NodeIndex>{a} : std::vector<NodeIndex>{a, b};
  };
  const auto pos1 = set(edge.source, i_hat), pos2 = set(edge.target, j_hat);
  const auto neg1 = set(edge.source, j_hat), neg2 = set(edge.target, i_hat);
  if (exact_) {
    Rational num = exact_b_[l] * (two_tree_weight_exact(pos1, pos2) - two_tree_weight_exact(neg1, neg2));
    return to_double(num, tree_weight_exact());
  }
  const double num = edge.susceptance * (two_tree_weight(pos1, pos2) - two_tree_weight(neg1, neg2));
  return num / tree_weight();
}

double ForestOracle::lodf(EdgeIndex l, EdgeIndex l_hat) {
  check_edge(l);
  check_edge(l_hat);
  if (l == l_hat) throw std::invalid_argument("LODF needs two distinct lines");
  const Edge& edge = network_.edge(l);
  const Edge& outage = network_.edge(l_hat);
  auto set = [](NodeIndex a, NodeIndex b) {
    return a == b ? std::vector<NodeIndex>{a} : std::vector<NodeIndex>{a, b};
  };
  const auto pos1 = set(edge.source, outage.source), pos2 = set(edge.target, outage.target);
  const auto neg1 = set(edge.source, outage.target), neg2 = set(edge.target, outage.source);
  const double den = tree_weight({l_hat});
  if (den == 0.0) {
    throw BridgeOutageError("line " + std::to_string(l_hat + 1) + " lies on every spanning tree");
  }
  if (exact_) {
    Rational num = exact_b_[l] * (two_tree_weight_exact(pos1, pos2) - two_tree_weight_exact(neg1, neg2));
    return to_double(num, tree_weight_exact({l_hat}));
  }
  return edge.susceptance * (two_tree_weight(pos1, pos2) - two_tree_weight(neg1, neg2)) / den;
}

EffectiveReactance ForestOracle::effective_reactance(EdgeIndex e) {
  check_edge(e);
  const Edge& edge = network_.edge(e);
  EffectiveReactance result;
  result.reactance = 1.0 / edge.susceptance;
  if (exact_) {
    const Rational all = tree_weight_exact();
    result.effective = to_double(two_tree_weight_exact({edge.source}, {edge.target}), all);
    const Rational share = tree_weight_exact({e}) / all;
    result.reduction_ratio = static_cast<double>(share);
    result.reactance_reduction = static_cast<double>(Rational(share / exact_b_[e]));
    return result;
  }
  const double all = tree_weight();
  result.effective = two_tree_weight({edge.source}, {edge.target}) / all;
  result.reduction_ratio = tree_weight({e}) / all;
  result.reactance_reduction = result.reactance * result.reduction_ratio;
  return result;
}

ForestFamily enumerate_spanning_trees(const Network& network, const EdgeSet& allowed) {
  return ForestOracle(network).spanning_trees(allowed);
}

ForestFamily enumerate_two_tree_forests(const Network& network, const std::vector<NodeIndex>& n1,
                                        const std::vector<NodeIndex>& n2) {
  return ForestOracle(network).two_tree_forests(n1, n2);
}

double a_entry_via_forests(const Network& network, NodeIndex i, NodeIndex j) {
  return ForestOracle(network).a_entry(i, j);
}

double ptdf_via_forests(const Network& network, EdgeIndex l, NodeIndex i_hat, NodeIndex j_hat) {
  return ForestOracle(network).ptdf(l, i_hat, j_hat);
}

double lodf_via_forests(const Network& network, EdgeIndex l, EdgeIndex l_hat) {
  return ForestOracle(network).lodf(l, l_hat);
}

EffectiveReactance effective_reactance(const Network& network, EdgeIndex e) {
  return ForestOracle(network).effective_reactance(e);
}

namespace {

double determinant(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

bool close(double a, double b, double tolerance, double floor) {
  return std::abs(a - b) <= tolerance * std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

MatrixTreeReport matrix_tree_check(ForestOracle& oracle, double tolerance) {
  const Network& network = oracle.network();
  const LaplacianBundle bundle(network);
  const NodeIndex ref = network.reference();
  MatrixTreeReport report;
  report.exact = oracle.exact();

  const double det = bundle.reduced_determinant();
  const double trees = oracle.exact() ? static_cast<double>(oracle.tree_weight_exact())
                                      : oracle.tree_weight();
  report.checks.push_back({"det(reduced L)", det, trees, close(det, trees, tolerance, 0.0)});

  // Reduced positions skip the reference node; cofactor signs follow them.
  std::vector<NodeIndex> nodes;
  for (NodeIndex v = 0; v < network.node_count(); ++v) {
    if (v != ref) nodes.push_back(v);
  }
  struct Minor {
    std::string label;
    double algebraic;
    double forest;
  };
  std::vector<Minor> minors;
  double scale = 0.0;
  const Eigen::MatrixXd& reduced = bundle.reduced_laplacian();
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      const double minor = determinant(
          drop_row_col(reduced, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      std::vector<NodeIndex> pair = nodes[r] == nodes[c] ? std::vector<NodeIndex>{nodes[r]}
                                                         : std::vector<NodeIndex>{nodes[r], nodes[c]};
      const double weight = oracle.exact()
                                ? static_cast<double>(oracle.two_tree_weight_exact(pair, {ref}))
                                : oracle.two_tree_weight(pair, {ref});
      const double sign = ((r + c) % 2 == 0) ? 1.0 : -1.0;
      minors.push_back({"minor(" + std::to_string(nodes[r] + 1) + "," + std::to_string(nodes[c] + 1) + ")",
                        minor, sign * weight});
      scale = std::max({scale, std::abs(minor), weight});
    }
  }
  // Structurally zero minors are compared against the largest minor.
  for (auto& minor : minors) {
    report.checks.push_back({minor.label, minor.algebraic, minor.forest,
                             close(minor.algebraic, minor.forest, tolerance, scale)});
  }
  return report;
}

MatrixTreeReport matrix_tree_check(const Network& network, double tolerance) {
  ForestOracle oracle(network);
  return matrix_tree_check(oracle, tolerance);
}

}  // namespace gridfactor
