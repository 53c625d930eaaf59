#include "gridfactor/factors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gridfactor/errors.hpp"

namespace gridfactor {

namespace {

constexpr double kBridgeTolerance = 1e-9;
constexpr double kSingularRatio = 1e-9;

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const EdgeSet& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

Eigen::VectorXd entries(const Eigen::VectorXd& v, const EdgeSet& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(idx[k])];
  return out;
}

bool is_singular(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0) return false;
  const double smallest = sigma[sigma.size() - 1];
  return !(smallest >= kSingularRatio * std::max(1.0, sigma[0]));
}

}  // namespace

Eigen::MatrixXd PtdfMatrix::block(const EdgeSet& rows, const EdgeSet& cols) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (*this)(rows[r], cols[c]);
    }
  }
  return out;
}

OutageSet::OutageSet(const Network& network, EdgeSet outaged) : outaged_(std::move(outaged)) {
  std::sort(outaged_.begin(), outaged_.end());
  outaged_.erase(std::unique(outaged_.begin(), outaged_.end()), outaged_.end());
  for (EdgeIndex e : outaged_) {
    if (e >= network.edge_count()) throw UnknownEdgeError("line " + std::to_string(e + 1));
  }
  if (outaged_.empty()) throw std::invalid_argument("outage set is empty");
  if (outaged_.size() == network.edge_count()) {
    throw std::invalid_argument("outage set must leave at least one line in service");
  }
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    if (!std::binary_search(outaged_.begin(), outaged_.end(), e)) surviving_.push_back(e);
  }
}

std::string_view to_string(GlodfMethod method) {
  switch (method) {
    case GlodfMethod::post_contingency: return "post_contingency";
    case GlodfMethod::pre_contingency: return "pre_contingency";
    case GlodfMethod::via_stack: return "via_stack";
    case GlodfMethod::cross_check: return "cross_check";
  }
  return "unknown";
}

std::optional<GlodfMethod> parse_glodf_method(std::string_view text) {
  for (auto method : {GlodfMethod::post_contingency, GlodfMethod::pre_contingency,
                      GlodfMethod::via_stack, GlodfMethod::cross_check}) {
    if (to_string(method) == text) return method;
  }
  return std::nullopt;
}

PtdfMatrix ptdf_matrix(const LaplacianBundle& bundle, const Network& network) {
  (void)network;
  const IncidenceMatrix& c = bundle.incidence();
  return PtdfMatrix{bundle.susceptances().asDiagonal() * (c.transpose() * bundle.a() * c)};
}

LodfColumn lodf_single(const PtdfMatrix& ptdf, const BlockDecomposition& blocks, EdgeIndex l_hat) {
  if (l_hat >= ptdf.size()) throw UnknownEdgeError("line " + std::to_string(l_hat + 1));
  if (blocks.is_bridge(l_hat)) {
    throw BridgeOutageError("line " + std::to_string(l_hat + 1) + " is a bridge");
  }
  LodfColumn column;
  column.outage = l_hat;
  const double denominator = 1.0 - ptdf(l_hat, l_hat);
  for (EdgeIndex l = 0; l < ptdf.size(); ++l) {
    if (l != l_hat) column.lines.push_back(l);
  }
  column.values.resize(static_cast<Eigen::Index>(column.lines.size()));
  for (std::size_t k = 0; k < column.lines.size(); ++k) {
    column.values[static_cast<Eigen::Index>(k)] = ptdf(column.lines[k], l_hat) / denominator;
  }
  return column;
}

Eigen::MatrixXd lodf_stack(const PtdfMatrix& ptdf, const OutageSet& outage) {
  const EdgeSet& f = outage.outaged();
  Eigen::VectorXd scale(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double gap = 1.0 - ptdf(f[k], f[k]);
    if (gap <= kBridgeTolerance) {
      throw BridgeOutageError("line " + std::to_string(f[k] + 1) + " is a bridge");
    }
    scale[static_cast<Eigen::Index>(k)] = 1.0 / gap;
  }
  return ptdf.block(outage.surviving(), f) * scale.asDiagonal();
}

GlodfResult glodf(const LaplacianBundle& bundle, const PtdfMatrix& ptdf, const Network& network,
                  const OutageSet& outage, GlodfMethod method) {
  if (is_cut_set(network, outage.outaged())) {
    throw CutSetError("removing the outage set disconnects the network");
  }
  const EdgeSet& f = outage.outaged();
  const EdgeSet& rest = outage.surviving();
  const auto mf = static_cast<Eigen::Index>(f.size());
  const Eigen::MatrixXd d_ff = ptdf.block(f, f);
  const Eigen::MatrixXd d_rest_f = ptdf.block(rest, f);
  const Eigen::MatrixXd gap = Eigen::MatrixXd::Identity(mf, mf) - d_ff;
  if (is_singular(gap)) {
    throw SingularError("I - D_FF is numerically singular for a non-cut outage");
  }
  // X (I - D_FF)^{-1} is computed as the transpose of a solve with (I - D_FF)^T.
  const Eigen::PartialPivLU<Eigen::MatrixXd> gap_t_lu(gap.transpose());

  GlodfResult result{outage, {}, lodf_stack(ptdf, outage), method, std::nullopt};

  auto pre_contingency = [&] {
    return Eigen::MatrixXd(gap_t_lu.solve(d_rest_f.transpose()).transpose());
  };
  auto via_stack = [&] {
    Eigen::MatrixXd scaled = result.k_stack * (Eigen::MatrixXd::Identity(mf, mf) - Eigen::MatrixXd(d_ff.diagonal().asDiagonal()));
    return Eigen::MatrixXd(gap_t_lu.solve(scaled.transpose()).transpose());
  };
  auto post_contingency = [&] {
    const Network surviving = network.subnetwork(rest);
    const LaplacianBundle post(surviving);
    const IncidenceMatrix c_f = columns(bundle.incidence(), f);
    const Eigen::VectorXd b_rest = entries(bundle.susceptances(), rest);
    return Eigen::MatrixXd(b_rest.asDiagonal() * (post.incidence().transpose() * post.a() * c_f));
  };

  switch (method) {
    case GlodfMethod::pre_contingency:
      result.k_f = pre_contingency();
      break;
    case GlodfMethod::via_stack:
      result.k_f = via_stack();
      break;
    case GlodfMethod::post_contingency:
      result.k_f = post_contingency();
      break;
    case GlodfMethod::cross_check: {
      const Eigen::MatrixXd pre = pre_contingency();
      const Eigen::MatrixXd stack = via_stack();
      const Eigen::MatrixXd post = post_contingency();
      result.residual = std::max({(pre - stack).cwiseAbs().maxCoeff(), (pre - post).cwiseAbs().maxCoeff(),
                                  (stack - post).cwiseAbs().maxCoeff()});
      result.k_f = pre;
      break;
    }
  }
  return result;
}

OutageFlows apply_outage(const LaplacianBundle& bundle, const Network& network,
                         const InjectionVector& p, const OutageSet& outage) {
  if (is_cut_set(network, outage.outaged())) {
    throw CutSetError("removing the outage set disconnects the network");
  }
  OutageFlows result;
  result.pre = solve_flow(bundle, network, p);

  const Network surviving = network.subnetwork(outage.surviving());
  const LaplacianBundle post_bundle(surviving);
  FlowState post = solve_flow(post_bundle, surviving, p);
  result.post.theta = std::move(post.theta);
  result.post.flows = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network.edge_count()));
  for (std::size_t k = 0; k < outage.surviving().size(); ++k) {
    result.post.flows[static_cast<Eigen::Index>(outage.surviving()[k])] = post.flows[static_cast<Eigen::Index>(k)];
  }
  return result;
}

InjectionVector characteristic_injection(const Network& network, EdgeIndex e) {
  if (e >= network.edge_count()) throw UnknownEdgeError("line " + std::to_string(e + 1));
  InjectionVector p = InjectionVector::Zero(static_cast<Eigen::Index>(network.node_count()));
  p[static_cast<Eigen::Index>(network.edge(e).source)] = 1.0;
  p[static_cast<Eigen::Index>(network.edge(e).target)] = -1.0;
  return p;
}

Eigen::VectorXd characteristic_injection_flow(const LaplacianBundle& bundle, const Network& network,
                                              EdgeIndex e) {
  return solve_flow(bundle, network, characteristic_injection(network, e)).flows;
}

bool detect_islanding(const PtdfMatrix& ptdf, const OutageSet& outage) {
  const auto mf = static_cast<Eigen::Index>(outage.size());
  return is_singular(Eigen::MatrixXd::Identity(mf, mf) - ptdf.block(outage.outaged(), outage.outaged()));
}

}  // namespace gridfactor
