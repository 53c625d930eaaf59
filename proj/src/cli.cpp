#include "gridfactor/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridfactor/cascade.hpp"
#include "gridfactor/dcpf.hpp"
#include "gridfactor/errors.hpp"
#include "gridfactor/factors.hpp"
#include "gridfactor/forests.hpp"
#include "gridfactor/graph.hpp"
#include "gridfactor/localization.hpp"
#include "gridfactor/network.hpp"

namespace gridfactor::cli {

namespace {

using json = nlohmann::json;
using Index = Eigen::Index;

struct Options {
  std::string input;
  std::string format = "json";
  std::optional<std::size_t> reference;
  std::optional<double> tolerance;
  std::uint64_t seed = 0;

  std::size_t line = 0;
  std::vector<std::size_t> lines;
  std::string method = "pre_contingency";
  bool perturb = false;
  std::size_t trials = 100;
  double eps = 1e-3;
  std::optional<std::size_t> max_stages;
  double threshold = 0.005;
  bool exact = false;
};

double default_tolerance() {
  if (const char* env = std::getenv("GRIDFACTOR_TOL")) {
    char* end = nullptr;
    const double value = std::strtod(env, &end);
    if (end != env && *end == '\0' && value > 0.0) return value;
    throw ValidationError("GRIDFACTOR_TOL is not a positive number");
  }
  return 1e-9;
}

json ids(const EdgeSet& edges) {
  json out = json::array();
  for (auto e : edges) out.push_back(e + 1);
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

json matrix_json(const Eigen::MatrixXd& m, const EdgeSet& rows, const EdgeSet& cols) {
  json data = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    data.push_back(std::move(row));
  }
  return {{"rows", ids(rows)}, {"columns", ids(cols)}, {"data", std::move(data)}};
}

std::string number(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m, const EdgeSet& rows, const EdgeSet& cols) {
  std::ostringstream out;
  out << "line";
  for (auto c : cols) out << ',' << c + 1;
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    out << rows[static_cast<std::size_t>(r)] + 1;
    for (Index c = 0; c < m.cols(); ++c) out << ',' << number(m(r, c));
    out << '\n';
  }
  return out.str();
}

EdgeSet all_lines(const Network& network) {
  EdgeSet out(network.edge_count());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = l;
  return out;
}

EdgeIndex to_edge(const Network& network, std::size_t id) {
  if (id == 0 || id > network.edge_count()) throw UnknownEdgeError("line id " + std::to_string(id));
  return id - 1;
}

EdgeSet to_edges(const Network& network, const std::vector<std::size_t>& id_list) {
  EdgeSet out;
  for (auto id : id_list) out.push_back(to_edge(network, id));
  return out;
}

void require_format(const Options& opts, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed) {
    if (opts.format == f) return;
  }
  throw ValidationError("format '" + opts.format + "' is not available for this command");
}

void emit(std::ostream& out, const json& document) { out << document.dump(2) << '\n'; }

Network load(const Options& opts) {
  Network network = load_network(opts.input);
  if (opts.reference) {
    if (*opts.reference == 0 || *opts.reference > network.node_count()) {
      throw ValidationError("reference node " + std::to_string(*opts.reference) + " does not exist");
    }
    network = network.with_reference(*opts.reference - 1);
  }
  return network;
}

int cmd_blocks(const Options& opts, std::ostream& out) {
  require_format(opts, {"json"});
  const Network network = load(opts);
  const BlockDecomposition blocks = block_decomposition(network);
  json doc;
  doc["blocks"] = json::array();
  for (const auto& block : blocks.blocks) doc["blocks"].push_back(ids(block));
  doc["bridges"] = ids(blocks.bridges);
  doc["cut_vertices"] = ids(blocks.cut_vertices);
  emit(out, doc);
  return 0;
}

int cmd_flow(const Options& opts, std::ostream& out) {
  require_format(opts, {"json", "csv"});
  const Network network = load(opts);
  const LaplacianBundle bundle(network);
  const FlowState state = solve_flow(bundle, network, network.injections());
  if (opts.format == "csv") {
    out << "line,from,to,flow\n";
    for (std::size_t l = 0; l < network.edge_count(); ++l) {
      out << l + 1 << ',' << network.edge(l).source + 1 << ',' << network.edge(l).target + 1 << ','
          << number(state.flows[static_cast<Index>(l)]) << '\n';
    }
    return 0;
  }
  json doc;
  doc["reference"] = network.reference() + 1;
  doc["angles"] = vector_json(state.theta);
  doc["flows"] = vector_json(state.flows);
  doc["lines"] = json::array();
  for (std::size_t l = 0; l < network.edge_count(); ++l) {
    doc["lines"].push_back({{"id", l + 1}, {"from", network.edge(l).source + 1}, {"to", network.edge(l).target + 1}});
  }
  emit(out, doc);
  return 0;
}

int cmd_ptdf(const Options& opts, std::ostream& out) {
  require_format(opts, {"json", "csv"});
  const Network network = load(opts);
  const LaplacianBundle bundle(network);
  const PtdfMatrix ptdf = ptdf_matrix(bundle, network);
  const EdgeSet lines = all_lines(network);
  if (opts.format == "csv") {
    out << matrix_csv(ptdf.values, lines, lines);
  } else {
    emit(out, {{"ptdf", matrix_json(ptdf.values, lines, lines)}});
  }
  return 0;
}

int cmd_lodf(const Options& opts, std::ostream& out) {
  require_format(opts, {"json", "csv"});
  const Network network = load(opts);
  const EdgeIndex l_hat = to_edge(network, opts.line);
  const LaplacianBundle bundle(network);
  const LodfColumn column = lodf_single(ptdf_matrix(bundle, network), block_decomposition(network), l_hat);
  if (opts.format == "csv") {
    out << matrix_csv(column.values, column.lines, {l_hat});
  } else {
    emit(out, {{"outage", l_hat + 1}, {"lodf", matrix_json(column.values, column.lines, {l_hat})}});
  }
  return 0;
}

int cmd_glodf(const Options& opts, std::ostream& out) {
  require_format(opts, {"json", "csv"});
  const auto method = parse_glodf_method(opts.method);
  if (!method) throw ValidationError("unknown method '" + opts.method + "'");
  const Network network = load(opts);
  const OutageSet outage(network, to_edges(network, opts.lines));
  const LaplacianBundle bundle(network);
  const GlodfResult result = glodf(bundle, ptdf_matrix(bundle, network), network, outage, *method);
  if (opts.format == "csv") {
    out << matrix_csv(result.k_f, outage.surviving(), outage.outaged());
    return 0;
  }
  json doc;
  doc["method"] = std::string(to_string(result.method));
  doc["outaged"] = ids(outage.outaged());
  doc["glodf"] = matrix_json(result.k_f, outage.surviving(), outage.outaged());
  doc["lodf_stack"] = matrix_json(result.k_stack, outage.surviving(), outage.outaged());
  if (result.residual) doc["residual"] = *result.residual;
  emit(out, doc);
  return 0;
}

int cmd_localize(const Options& opts, std::ostream& out) {
  require_format(opts, {"json"});
  const Network network = load(opts);
  const double tol = opts.tolerance.value_or(default_tolerance());
  const OutageSet outage(network, to_edges(network, opts.lines));
  const LaplacianBundle bundle(network);
  const PtdfMatrix ptdf = ptdf_matrix(bundle, network);
  const BlockDecomposition blocks = block_decomposition(network);
  const GlodfResult result = glodf(bundle, ptdf, network, outage);
  const LocalizationReport report = block_structure_report(network, bundle, ptdf, blocks, result, tol);

  json doc;
  doc["outaged"] = ids(report.outaged);
  doc["zero_tolerance"] = report.zero_tolerance;
  doc["glodf_max"] = report.k_f_max;
  doc["cross_block_max"] = report.cross_block_max;
  doc["stack_cross_block_max"] = report.stack_cross_block_max;
  doc["reassembly_residual"] = report.reassembly_residual;
  doc["within_block_pairs"] = report.within_block_pairs;
  doc["within_block_zero_count"] = report.within_block_zero_count;
  doc["localized"] = report.localized();
  doc["blocks"] = json::array();
  for (const auto& piece : report.blocks) {
    json b;
    b["block"] = piece.block + 1;
    b["outaged"] = ids(piece.outaged);
    b["surviving"] = ids(piece.surviving);
    b["d_minus"] = matrix_json(piece.d_minus, piece.surviving, piece.outaged);
    b["d_k"] = matrix_json(piece.d_k, piece.outaged, piece.outaged);
    b["k_k"] = matrix_json(piece.k_k, piece.surviving, piece.outaged);
    b["glodf"] = matrix_json(piece.k_f, piece.surviving, piece.outaged);
    b["residual"] = piece.residual;
    doc["blocks"].push_back(std::move(b));
  }

  if (opts.perturb) {
    PerturbationSpec spec;
    spec.relative_magnitude = opts.eps;
    spec.trials = opts.trials;
    spec.seed = opts.seed;
    const PerturbationStatistics stats = almost_sure_nonzero_test(network, outage.outaged(), spec, tol);
    json p;
    p["eps"] = spec.relative_magnitude;
    p["trials"] = spec.trials;
    p["seed"] = spec.seed;
    p["within_block_pairs"] = stats.within_block_pairs;
    p["within_block_always_nonzero"] = stats.within_block_always_nonzero;
    p["within_block_unperturbed_zero"] = stats.within_block_unperturbed_zero;
    p["within_block_nonzero_fraction"] = stats.within_block_nonzero_fraction;
    p["cross_block_nonzero_events"] = stats.cross_block_nonzero_events;
    p["pairs"] = json::array();
    for (const auto& pair : stats.pairs) {
      p["pairs"].push_back({{"line", pair.line + 1},
                            {"outage", pair.outage + 1},
                            {"same_block", pair.same_block},
                            {"unperturbed", pair.unperturbed},
                            {"nonzero_trials", pair.nonzero_trials}});
    }
    doc["perturbation"] = std::move(p);
  }
  emit(out, doc);
  return 0;
}

json trace_json(const CascadeTrace& trace) {
  json doc;
  doc["initial_outage"] = ids(trace.initial_outage);
  doc["status"] = std::string(to_string(trace.status));
  doc["islanded_stage"] = trace.islanded_stage ? json(*trace.islanded_stage) : json(nullptr);
  doc["stages"] = json::array();
  for (const auto& stage : trace.stages) {
    json s;
    s["stage"] = stage.index;
    s["tripped"] = ids(stage.tripped);
    s["flows"] = stage.flow ? vector_json(stage.flow->flows) : json(nullptr);
    s["conservation_residual"] = stage.conservation_residual;
    doc["stages"].push_back(std::move(s));
  }
  return doc;
}

int cmd_cascade(const Options& opts, std::ostream& out) {
  require_format(opts, {"json"});
  const Network network = load(opts);
  const EdgeSet trip = to_edges(network, opts.lines);
  try {
    emit(out, trace_json(run_cascade(network, network.injections(), trip, opts.max_stages)));
  } catch (const MaxStagesError& error) {
    emit(out, trace_json(error.trace()));
    throw;
  }
  return 0;
}

int cmd_influence(const Options& opts, std::ostream& out) {
  require_format(opts, {"json", "dot"});
  const Network network = load(opts);
  const LaplacianBundle bundle(network);
  const InfluenceGraph graph =
      influence_graph(ptdf_matrix(bundle, network), block_decomposition(network), opts.threshold);
  if (opts.format == "dot") {
    out << to_dot(graph, network.edge_count());
    return 0;
  }
  json doc;
  doc["threshold"] = graph.threshold;
  doc["pairs"] = json::array();
  for (const auto& edge : graph.edges) {
    doc["pairs"].push_back({{"lines", {edge.first + 1, edge.second + 1}}, {"weight", edge.weight}});
  }
  emit(out, doc);
  return 0;
}

struct Tally {
  std::size_t checked = 0;
  double max_error = 0.0;
  bool passed = true;

  void add(double algebraic, double forest, double tol, double scale) {
    ++checked;
    const double error = std::abs(algebraic - forest);
    max_error = std::max(max_error, error);
    if (!(error <= tol * std::max({scale, std::abs(algebraic), std::abs(forest)}))) passed = false;
  }
  [[nodiscard]] json to_json() const {
    return {{"checked", checked}, {"max_error", max_error}, {"passed", passed}};
  }
};

int cmd_verify(const Options& opts, std::ostream& out) {
  require_format(opts, {"json"});
  const Network network = load(opts);
  const double tol = opts.tolerance.value_or(default_tolerance());
  ForestOracle oracle(network, opts.exact);
  const LaplacianBundle bundle(network);
  const PtdfMatrix ptdf = ptdf_matrix(bundle, network);
  const BlockDecomposition blocks = block_decomposition(network);
  const std::size_t n = network.node_count();
  const std::size_t m = network.edge_count();

  const MatrixTreeReport tree = matrix_tree_check(oracle, tol);
  json tree_doc;
  tree_doc["checked"] = tree.checks.size();
  tree_doc["passed"] = tree.passed();
  tree_doc["determinant"] = tree.checks.front().algebraic;
  tree_doc["tree_weight"] = tree.checks.front().forest;
  tree_doc["failures"] = json::array();
  for (const auto& check : tree.checks) {
    if (!check.passed) tree_doc["failures"].push_back(check.label);
  }

  Tally spectral;
  const double a_scale = bundle.a().cwiseAbs().maxCoeff();
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex j = 0; j < n; ++j) spectral.add(bundle.a()(Index(i), Index(j)), oracle.a_entry(i, j), tol, a_scale);
  }
  Tally ptdf_tally;
  for (EdgeIndex l = 0; l < m; ++l) {
    for (EdgeIndex l_hat = 0; l_hat < m; ++l_hat) {
      const Edge& edge = network.edge(l_hat);
      ptdf_tally.add(ptdf(l, l_hat), oracle.ptdf(l, edge.source, edge.target), tol, 1.0);
    }
  }
  Tally lodf_tally;
  for (EdgeIndex l_hat = 0; l_hat < m; ++l_hat) {
    if (blocks.is_bridge(l_hat)) continue;
    const LodfColumn column = lodf_single(ptdf, blocks, l_hat);
    for (std::size_t k = 0; k < column.lines.size(); ++k) {
      lodf_tally.add(column.values[Index(k)], oracle.lodf(column.lines[k], l_hat), tol, 1.0);
    }
  }
  Tally reactance_tally;
  bool reactance_bounded = true;
  const Eigen::MatrixXd pinv = bundle.pseudo_inverse();
  for (EdgeIndex e = 0; e < m; ++e) {
    const auto i = Index(network.edge(e).source);
    const auto j = Index(network.edge(e).target);
    const double algebraic = pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j);
    const EffectiveReactance r = oracle.effective_reactance(e);
    reactance_tally.add(algebraic, r.effective, tol, r.reactance);
    reactance_bounded = reactance_bounded && r.effective <= r.reactance * (1.0 + tol);
  }

  const bool passed = tree.passed() && spectral.passed && ptdf_tally.passed && lodf_tally.passed &&
                      reactance_tally.passed && reactance_bounded;
  json doc;
  doc["tolerance"] = tol;
  doc["exact"] = oracle.exact();
  doc["matrix_tree"] = std::move(tree_doc);
  doc["spectral"] = spectral.to_json();
  doc["ptdf"] = ptdf_tally.to_json();
  doc["lodf"] = lodf_tally.to_json();
  doc["effective_reactance"] = reactance_tally.to_json();
  doc["effective_reactance"]["bounded_by_reactance"] = reactance_bounded;
  doc["passed"] = passed;
  emit(out, doc);
  return passed ? 0 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DC power-flow contingency analysis", "gridfactor"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;

  app.add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"json", "csv", "dot"}));
  app.add_option("--reference", opts.reference, "Reference node id (overrides the document)");
  app.add_option("--tol", opts.tolerance, "Tolerance (default: GRIDFACTOR_TOL or 1e-9)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "Random seed");

  auto with_input = [&](CLI::App* sub) {
    sub->add_option("network", opts.input, "Network JSON file, edges CSV or CSV directory")
        ->required()
        ->check(CLI::ExistingPath);
    return sub;
  };

  auto* blocks = with_input(app.add_subcommand("blocks", "Block decomposition"));
  auto* flow = with_input(app.add_subcommand("flow", "DC power flow"));
  auto* ptdf = with_input(app.add_subcommand("ptdf", "PTDF matrix"));
  auto* lodf = with_input(app.add_subcommand("lodf", "Single-line LODF column"));
  lodf->add_option("--line", opts.line, "Tripped line id")->required();
  auto* glodf_cmd = with_input(app.add_subcommand("glodf", "Generalized LODF for a line set"));
  glodf_cmd->add_option("--lines", opts.lines, "Tripped line ids")->required()->delimiter(',');
  glodf_cmd->add_option("--method", opts.method,
                        "post_contingency, pre_contingency, via_stack or cross_check");
  auto* localize = with_input(app.add_subcommand("localize", "Block localization report"));
  localize->add_option("--lines", opts.lines, "Tripped line ids")->required()->delimiter(',');
  localize->add_flag("--perturb", opts.perturb, "Add random susceptance perturbation statistics");
  localize->add_option("--trials", opts.trials, "Perturbation trials")->check(CLI::PositiveNumber);
  localize->add_option("--eps", opts.eps, "Relative perturbation magnitude")->check(CLI::Range(0.0, 0.999999));
  auto* cascade = with_input(app.add_subcommand("cascade", "Cascading failure simulation"));
  cascade->add_option("--trip", opts.lines, "Initially tripped line ids")->required()->delimiter(',');
  cascade->add_option("--max-stages", opts.max_stages, "Stage limit (default: line count)");
  auto* influence = with_input(app.add_subcommand("influence", "Influence graph"));
  influence->add_option("--threshold", opts.threshold, "Minimum |LODF|")->check(CLI::NonNegativeNumber);
  auto* verify = with_input(app.add_subcommand("verify", "Check algebraic identities against forests"));
  verify->add_flag("--exact", opts.exact, "Sum forest weights in rational arithmetic");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*blocks) return cmd_blocks(opts, out);
    if (*flow) return cmd_flow(opts, out);
    if (*ptdf) return cmd_ptdf(opts, out);
    if (*lodf) return cmd_lodf(opts, out);
    if (*glodf_cmd) return cmd_glodf(opts, out);
    if (*localize) return cmd_localize(opts, out);
    if (*cascade) return cmd_cascade(opts, out);
    if (*influence) return cmd_influence(opts, out);
    if (*verify) return cmd_verify(opts, out);
  } catch (const Error& error) {
    err << "error: " << error.what() << '\n';
    return error.kind() == ErrorKind::input ? 1 : 2;
  } catch (const std::invalid_argument& error) {
    err << "error: " << error.what() << '\n';
    return 1;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace gridfactor::cli
