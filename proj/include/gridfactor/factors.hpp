#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "gridfactor/dcpf.hpp"
#include "gridfactor/graph.hpp"
#include "gridfactor/network.hpp"

namespace gridfactor {

/// m x m power transfer distribution factors D = B C^T A C, indexed (l, l_hat).
struct PtdfMatrix {
  Eigen::MatrixXd values;

  [[nodiscard]] double operator()(EdgeIndex l, EdgeIndex l_hat) const {
    return values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l_hat));
  }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
  /// Submatrix with the given rows and columns, in the given order.
  [[nodiscard]] Eigen::MatrixXd block(const EdgeSet& rows, const EdgeSet& cols) const;
};

/// A set F of simultaneously tripped lines (sorted, unique) and the surviving
/// lines -F, both in ascending edge order.
class OutageSet {
 public:
  /// Throws UnknownEdgeError for unknown lines and std::invalid_argument when
  /// F is empty or covers every line.
  OutageSet(const Network& network, EdgeSet outaged);

  [[nodiscard]] const EdgeSet& outaged() const noexcept { return outaged_; }
  [[nodiscard]] const EdgeSet& surviving() const noexcept { return surviving_; }
  [[nodiscard]] std::size_t size() const noexcept { return outaged_.size(); }

 private:
  EdgeSet outaged_;
  EdgeSet surviving_;
};

/// Single-line LODF K_{l l_hat} for every surviving line l != l_hat.
struct LodfColumn {
  EdgeIndex outage = 0;
  EdgeSet lines;
  Eigen::VectorXd values;
};

enum class GlodfMethod { post_contingency, pre_contingency, via_stack, cross_check };

[[nodiscard]] std::string_view to_string(GlodfMethod method);
[[nodiscard]] std::optional<GlodfMethod> parse_glodf_method(std::string_view text);

struct GlodfResult {
  OutageSet outage;
  Eigen::MatrixXd k_f;      // GLODF K^F, rows -F, cols F
  Eigen::MatrixXd k_stack;  // stacked single-line LODFs K_{-FF}
  GlodfMethod method = GlodfMethod::pre_contingency;
  /// Max entrywise disagreement between the three formulas (cross_check only).
  std::optional<double> residual;
};

[[nodiscard]] PtdfMatrix ptdf_matrix(const LaplacianBundle& bundle, const Network& network);

/// Throws BridgeOutageError when l_hat is a bridge.
[[nodiscard]] LodfColumn lodf_single(const PtdfMatrix& ptdf, const BlockDecomposition& blocks,
                                     EdgeIndex l_hat);

/// K_{-FF} = D_{-FF} (I - diag(D_FF))^{-1}. Throws BridgeOutageError when a
/// tripped line has D_ll within 1e-9 of one.
[[nodiscard]] Eigen::MatrixXd lodf_stack(const PtdfMatrix& ptdf, const OutageSet& outage);

/// GLODF for a non-cut outage. post_contingency refactors the surviving
/// network; pre_contingency uses D_{-FF}(I - D_FF)^{-1}; via_stack uses
/// K_{-FF}(I - diag D_FF)(I - D_FF)^{-1}; cross_check evaluates all three,
/// returns the pre_contingency value and records the largest disagreement.
/// Throws CutSetError when F disconnects the network and SingularError when
/// I - D_FF is numerically singular although F is not a cut set.
[[nodiscard]] GlodfResult glodf(const LaplacianBundle& bundle, const PtdfMatrix& ptdf,
                                const Network& network, const OutageSet& outage,
                                GlodfMethod method = GlodfMethod::pre_contingency);

struct OutageFlows {
  FlowState pre;
  FlowState post;  // tripped lines carry zero flow
};

/// Pre-contingency flows and flows re-solved directly on the surviving graph.
[[nodiscard]] OutageFlows apply_outage(const LaplacianBundle& bundle, const Network& network,
                                       const InjectionVector& p, const OutageSet& outage);

/// Unit injection at the source of e, unit withdrawal at its target.
[[nodiscard]] InjectionVector characteristic_injection(const Network& network, EdgeIndex e);
/// Flows under the characteristic injection of e; equals column e of D.
[[nodiscard]] Eigen::VectorXd characteristic_injection_flow(const LaplacianBundle& bundle,
                                                            const Network& network, EdgeIndex e);

/// True iff I - D_FF is numerically singular (smallest singular value below
/// 1e-9 times the largest), which happens exactly when F is a cut set.
[[nodiscard]] bool detect_islanding(const PtdfMatrix& ptdf, const OutageSet& outage);

}  // namespace gridfactor
