#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridfactor/dcpf.hpp"
#include "gridfactor/errors.hpp"
#include "gridfactor/factors.hpp"
#include "gridfactor/graph.hpp"
#include "gridfactor/network.hpp"

namespace gridfactor {

enum class CascadeStatus { converged, islanded, no_initial_overload, max_stages };

[[nodiscard]] std::string_view to_string(CascadeStatus status);

/// Stage k holds the flow on the graph left after the trips of stages 0..k-1
/// and the lines tripped at stage k. Stage 0 carries the intact flow and trips
/// the initial outage; later stages trip every line overloaded in their own
/// flow. The flow is absent at the stage where the surviving graph is found
/// disconnected.
struct CascadeStage {
  std::size_t index = 0;
  std::optional<FlowState> flow;  // per-edge flows are zero on removed lines
  EdgeSet tripped;
  double conservation_residual = 0.0;  // max |C f - p| over nodes
};

struct CascadeTrace {
  EdgeSet initial_outage;
  std::vector<CascadeStage> stages;
  CascadeStatus status = CascadeStatus::converged;
  std::optional<std::size_t> islanded_stage;

  [[nodiscard]] EdgeSet cumulative_outage() const;
};

class MaxStagesError : public Error {
 public:
  explicit MaxStagesError(CascadeTrace trace)
      : Error(ErrorKind::analysis, "cascade exceeded the stage limit"), trace_(std::move(trace)) {}
  [[nodiscard]] const CascadeTrace& trace() const noexcept { return trace_; }

 private:
  CascadeTrace trace_;
};

/// Simulates the cascade until no line is overloaded (|f| > capacity, strict),
/// the surviving graph islands, or max_stages (default: line count) is reached
/// with lines still overloaded, which throws MaxStagesError. Status
/// no_initial_overload marks an initial outage whose lines carried no flow,
/// so nothing is redistributed.
[[nodiscard]] CascadeTrace run_cascade(const Network& network, const InjectionVector& p,
                                       const EdgeSet& initial_outage,
                                       std::optional<std::size_t> max_stages = std::nullopt);

struct InfluenceEdge {
  EdgeIndex first = 0;
  EdgeIndex second = 0;
  double weight = 0.0;  // max of |K_{first second}| and |K_{second first}|
};

struct InfluenceGraph {
  double threshold = 0.005;
  std::vector<InfluenceEdge> edges;  // sorted by (first, second), first < second
};

/// Unordered pairs in the same block with |K| >= threshold in either
/// direction. Entries within 1e-9 of zero relative to max |K| never count.
[[nodiscard]] InfluenceGraph influence_graph(const PtdfMatrix& ptdf, const BlockDecomposition& blocks,
                                             double threshold = 0.005);

/// Graphviz text with one node per line (1-based ids).
[[nodiscard]] std::string to_dot(const InfluenceGraph& graph, std::size_t line_count);

}  // namespace gridfactor
