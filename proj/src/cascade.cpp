#include "gridfactor/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "gridfactor/localization.hpp"

namespace gridfactor {

namespace {

using Index = Eigen::Index;

double residual(const Network& network, const Eigen::VectorXd& flows, const InjectionVector& p) {
  Eigen::VectorXd balance = -p;
  for (std::size_t l = 0; l < network.edge_count(); ++l) {
    const Edge& edge = network.edge(l);
    balance[static_cast<Index>(edge.source)] += flows[static_cast<Index>(l)];
    balance[static_cast<Index>(edge.target)] -= flows[static_cast<Index>(l)];
  }
  return balance.size() ? balance.cwiseAbs().maxCoeff() : 0.0;
}

FlowState surviving_flow(const Network& network, const InjectionVector& p, const EdgeSet& surviving) {
  const Network sub = network.subnetwork(surviving);
  const LaplacianBundle bundle(sub);
  FlowState partial = solve_flow(bundle, sub, p);
  FlowState full;
  full.theta = std::move(partial.theta);
  full.flows = Eigen::VectorXd::Zero(static_cast<Index>(network.edge_count()));
  for (std::size_t k = 0; k < surviving.size(); ++k) {
    full.flows[static_cast<Index>(surviving[k])] = partial.flows[static_cast<Index>(k)];
  }
  return full;
}

}  // namespace

std::string_view to_string(CascadeStatus status) {
  switch (status) {
    case CascadeStatus::converged: return "converged";
    case CascadeStatus::islanded: return "islanded";
    case CascadeStatus::no_initial_overload: return "no_initial_overload";
    case CascadeStatus::max_stages: return "max_stages";
  }
  return "unknown";
}

EdgeSet CascadeTrace::cumulative_outage() const {
  EdgeSet all;
  for (const auto& stage : stages) all.insert(all.end(), stage.tripped.begin(), stage.tripped.end());
  std::sort(all.begin(), all.end());
  return all;
}

CascadeTrace run_cascade(const Network& network, const InjectionVector& p, const EdgeSet& initial_outage,
                         std::optional<std::size_t> max_stages) {
  require_balanced(network, p);
  if (initial_outage.empty()) throw std::invalid_argument("initial outage is empty");
  const std::size_t m = network.edge_count();
  const std::size_t limit = max_stages.value_or(m);

  CascadeTrace trace;
  trace.initial_outage = initial_outage;
  std::sort(trace.initial_outage.begin(), trace.initial_outage.end());
  trace.initial_outage.erase(std::unique(trace.initial_outage.begin(), trace.initial_outage.end()),
                             trace.initial_outage.end());
  for (EdgeIndex e : trace.initial_outage) {
    if (e >= m) throw UnknownEdgeError("line " + std::to_string(e + 1));
  }

  std::vector<bool> removed(m, false);
  {
    const LaplacianBundle bundle(network);
    CascadeStage stage;
    stage.flow = solve_flow(bundle, network, p);
    stage.tripped = trace.initial_outage;
    stage.conservation_residual = residual(network, stage.flow->flows, p);
    trace.stages.push_back(std::move(stage));
  }
  bool carried_flow = false;
  for (EdgeIndex e : trace.initial_outage) {
    removed[e] = true;
    carried_flow = carried_flow || trace.stages[0].flow->flows[static_cast<Index>(e)] != 0.0;
  }

  for (std::size_t k = 1;; ++k) {
    EdgeSet surviving;
    EdgeSet outaged;
    for (EdgeIndex l = 0; l < m; ++l) (removed[l] ? outaged : surviving).push_back(l);

    CascadeStage stage;
    stage.index = k;
    if (surviving.empty() || is_cut_set(network, outaged)) {
      trace.stages.push_back(std::move(stage));
      trace.status = CascadeStatus::islanded;
      trace.islanded_stage = k;
      return trace;
    }
    stage.flow = surviving_flow(network, p, surviving);
    stage.conservation_residual = residual(network, stage.flow->flows, p);
    for (EdgeIndex l : surviving) {
      if (std::abs(stage.flow->flows[static_cast<Index>(l)]) > network.edge(l).capacity) {
        stage.tripped.push_back(l);
      }
    }
    const bool done = stage.tripped.empty();
    for (EdgeIndex l : stage.tripped) removed[l] = true;
    trace.stages.push_back(std::move(stage));
    if (done) {
      trace.status = carried_flow ? CascadeStatus::converged : CascadeStatus::no_initial_overload;
      return trace;
    }
    if (k >= limit) {
      trace.status = CascadeStatus::max_stages;
      throw MaxStagesError(std::move(trace));
    }
  }
}

InfluenceGraph influence_graph(const PtdfMatrix& ptdf, const BlockDecomposition& blocks, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be nonnegative");
  const std::size_t m = ptdf.size();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (EdgeIndex outage = 0; outage < m; ++outage) {
    if (blocks.is_bridge(outage)) continue;
    const double gap = 1.0 - ptdf(outage, outage);
    for (EdgeIndex line = 0; line < m; ++line) {
      if (line != outage) k(static_cast<Index>(line), static_cast<Index>(outage)) = ptdf(line, outage) / gap;
    }
  }
  const double floor = kZeroTolerance * (k.size() ? k.cwiseAbs().maxCoeff() : 0.0);

  InfluenceGraph graph;
  graph.threshold = threshold;
  for (EdgeIndex a = 0; a < m; ++a) {
    for (EdgeIndex b = a + 1; b < m; ++b) {
      if (blocks.block_of[a] != blocks.block_of[b]) continue;
      const double weight = std::max(std::abs(k(static_cast<Index>(a), static_cast<Index>(b))),
                                     std::abs(k(static_cast<Index>(b), static_cast<Index>(a))));
      if (weight >= threshold && weight > floor) graph.edges.push_back({a, b, weight});
    }
  }
  return graph;
}

std::string to_dot(const InfluenceGraph& graph, std::size_t line_count) {
  std::ostringstream out;
  out << "graph influence {\n";
  for (std::size_t l = 0; l < line_count; ++l) out << "  " << l + 1 << ";\n";
  out << std::setprecision(17);
  for (const auto& edge : graph.edges) {
    out << "  " << edge.first + 1 << " -- " << edge.second + 1 << " [weight=" << edge.weight << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace gridfactor
