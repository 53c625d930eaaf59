#include "gridfactor/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "disjoint_sets.hpp"
#include "gridfactor/errors.hpp"

namespace gridfactor {

Network::Network(std::size_t node_count, std::vector<Edge> edges, NodeIndex reference,
                 InjectionVector injections)
    : node_count_(node_count),
      edges_(std::move(edges)),
      reference_(reference),
      injections_(std::move(injections)) {}

Network::Network(std::size_t node_count, std::vector<Edge> edges)
    : Network(node_count, std::move(edges), node_count == 0 ? 0 : node_count - 1,
              InjectionVector::Zero(static_cast<Eigen::Index>(node_count))) {}

Eigen::VectorXd Network::susceptances() const {
  Eigen::VectorXd b(static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t l = 0; l < edges_.size(); ++l) b[static_cast<Eigen::Index>(l)] = edges_[l].susceptance;
  return b;
}

Network Network::with_reference(NodeIndex reference) const {
  Network copy = *this;
  copy.reference_ = reference;
  return copy;
}

Network Network::with_susceptances(const Eigen::VectorXd& b) const {
  Network copy = *this;
  for (std::size_t l = 0; l < copy.edges_.size(); ++l) {
    copy.edges_[l].susceptance = b[static_cast<Eigen::Index>(l)];
  }
  return copy;
}

Network Network::with_capacities(const Eigen::VectorXd& capacities) const {
  Network copy = *this;
  for (std::size_t l = 0; l < copy.edges_.size(); ++l) {
    copy.edges_[l].capacity = capacities[static_cast<Eigen::Index>(l)];
  }
  return copy;
}

Network Network::with_injections(InjectionVector p) const {
  Network copy = *this;
  copy.injections_ = std::move(p);
  return copy;
}

Network Network::subnetwork(const EdgeSet& kept) const {
  std::vector<Edge> edges;
  edges.reserve(kept.size());
  for (EdgeIndex e : kept) edges.push_back(edges_.at(e));
  return Network(node_count_, std::move(edges), reference_, injections_);
}

bool operator==(const Network& a, const Network& b) {
  return a.node_count_ == b.node_count_ && a.edges_ == b.edges_ && a.reference_ == b.reference_ &&
         a.injections_.size() == b.injections_.size() && a.injections_ == b.injections_;
}

ValidationReport validate(const Network& network) {
  ValidationReport report;
  const std::size_t n = network.node_count();
  auto add = [&report](std::string kind, std::string message) {
    report.push_back({std::move(kind), std::move(message)});
  };

  if (n < 2) add("too few nodes", "a network needs at least two nodes");
  if (network.edge_count() == 0) add("no edges", "a network needs at least one edge");
  if (n > 0 && network.reference() >= n) add("invalid reference", "reference node is not in the network");
  if (static_cast<std::size_t>(network.injections().size()) != n) {
    add("injection size", "injection vector length differs from the node count");
  } else if (!is_balanced(network.injections())) {
    add("unbalanced injections", "injections do not sum to zero");
  }

  std::set<std::pair<NodeIndex, NodeIndex>> seen;
  bool endpoints_ok = true;
  for (std::size_t l = 0; l < network.edge_count(); ++l) {
    const Edge& edge = network.edge(l);
    const std::string line = "line " + std::to_string(l + 1);
    if (edge.source >= n || edge.target >= n) {
      add("unknown node", line + " references a node outside 1.." + std::to_string(n));
      endpoints_ok = false;
      continue;
    }
    if (edge.source == edge.target) {
      add("self-loop", line + " connects node " + std::to_string(edge.source + 1) + " to itself");
    }
    auto key = std::minmax(edge.source, edge.target);
    if (!seen.insert({key.first, key.second}).second) {
      add("duplicate edge", line + " duplicates an earlier line between nodes " +
                                std::to_string(key.first + 1) + " and " + std::to_string(key.second + 1));
    }
    if (!(edge.susceptance > 0.0) || !std::isfinite(edge.susceptance)) {
      add("nonpositive susceptance", line + " has susceptance that is not a positive finite number");
    }
    if (!(edge.capacity > 0.0)) add("nonpositive capacity", line + " has nonpositive capacity");
  }

  if (n >= 2 && endpoints_ok) {
    detail::DisjointSets sets(n);
    for (const Edge& edge : network.edges()) sets.unite(edge.source, edge.target);
    if (sets.components() > 1) {
      add("disconnected", "graph has " + std::to_string(sets.components()) + " connected components");
    }
  }
  return report;
}

IncidenceMatrix incidence_matrix(const Network& network) {
  IncidenceMatrix c = IncidenceMatrix::Zero(static_cast<Eigen::Index>(network.node_count()),
                                            static_cast<Eigen::Index>(network.edge_count()));
  for (std::size_t l = 0; l < network.edge_count(); ++l) {
    const Edge& edge = network.edge(l);
    c(static_cast<Eigen::Index>(edge.source), static_cast<Eigen::Index>(l)) = 1.0;
    c(static_cast<Eigen::Index>(edge.target), static_cast<Eigen::Index>(l)) = -1.0;
  }
  return c;
}

bool is_balanced(const InjectionVector& p) {
  if (p.size() == 0) return true;
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  return std::abs(p.sum()) <= 1e-9 * scale;
}

void require_balanced(const Network& network, const InjectionVector& p) {
  if (static_cast<std::size_t>(p.size()) != network.node_count()) {
    throw UnbalancedInjectionError("expected " + std::to_string(network.node_count()) +
                                   " injections, got " + std::to_string(p.size()));
  }
  if (!is_balanced(p)) {
    std::ostringstream msg;
    msg << "injections sum to " << p.sum();
    throw UnbalancedInjectionError(msg.str());
  }
}

namespace {

void throw_if_invalid(const Network& network) {
  ValidationReport report = validate(network);
  if (report.empty()) return;
  std::string message;
  for (const auto& finding : report) {
    if (!message.empty()) message += "; ";
    message += finding.kind + ": " + finding.message;
  }
  throw ValidationError(message);
}

double parse_real(std::string_view text, const std::string& context) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text == "inf" || text == "+inf" || text == "Infinity") return kInfiniteCapacity;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(context + ": '" + std::string(text) + "' is not a decimal number");
  }
  return value;
}

std::size_t parse_node_id(std::string_view text, const std::string& context) {
  double value = parse_real(text, context);
  if (!(value >= 1.0) || value != std::floor(value) || !std::isfinite(value)) {
    throw ParseError(context + ": node ids are positive integers");
  }
  return static_cast<std::size_t>(value);
}

std::size_t json_node_id(const nlohmann::json& value, const std::string& context) {
  if (!value.is_number_integer() || value.get<long long>() < 1) {
    throw ParseError(context + ": node ids are positive integers");
  }
  return static_cast<std::size_t>(value.get<long long>());
}

double json_real(const nlohmann::json& value, const std::string& context) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return parse_real(value.get<std::string>(), context);
  throw ParseError(context + ": expected a number");
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& name) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      auto first = field.find_first_not_of(" \t");
      auto last = field.find_last_not_of(" \t");
      fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ParseError(name + " is empty");
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Network load_network_json(const nlohmann::json& document) {
  if (!document.is_object()) throw ParseError("network document must be a JSON object");
  if (!document.contains("edges") || !document["edges"].is_array()) {
    throw ParseError("network document needs an \"edges\" array");
  }

  std::size_t n = 0;
  if (document.contains("nodes")) {
    const auto& nodes = document["nodes"];
    if (!nodes.is_array()) throw ParseError("\"nodes\" must be an array");
    std::set<std::size_t> ids;
    for (const auto& id : nodes) ids.insert(json_node_id(id, "nodes"));
    if (ids.size() != nodes.size()) throw ValidationError("duplicate node ids in \"nodes\"");
    n = ids.size();
    if (!ids.empty() && (*ids.begin() != 1 || *ids.rbegin() != n)) {
      throw ValidationError("node ids must be exactly 1..n");
    }
  }

  std::vector<Edge> edges;
  std::size_t index = 0;
  for (const auto& item : document["edges"]) {
    const std::string context = "edge " + std::to_string(++index);
    if (!item.is_object() || !item.contains("from") || !item.contains("to") || !item.contains("b")) {
      throw ParseError(context + ": needs \"from\", \"to\" and \"b\"");
    }
    Edge edge;
    std::size_t from = json_node_id(item["from"], context);
    std::size_t to = json_node_id(item["to"], context);
    edge.source = from - 1;
    edge.target = to - 1;
    edge.susceptance = json_real(item["b"], context);
    if (item.contains("cap") && !item["cap"].is_null()) edge.capacity = json_real(item["cap"], context);
    if (!document.contains("nodes")) n = std::max({n, from, to});
    edges.push_back(edge);
  }

  NodeIndex reference = n == 0 ? 0 : n - 1;
  if (document.contains("reference") && !document["reference"].is_null()) {
    reference = json_node_id(document["reference"], "reference") - 1;
  }

  InjectionVector p = InjectionVector::Zero(static_cast<Eigen::Index>(n));
  if (document.contains("injections") && !document["injections"].is_null()) {
    const auto& injections = document["injections"];
    if (!injections.is_object()) throw ParseError("\"injections\" must be an object keyed by node id");
    for (const auto& [key, value] : injections.items()) {
      std::size_t id = parse_node_id(key, "injections");
      if (id > n) throw ValidationError("injection at unknown node " + key);
      p[static_cast<Eigen::Index>(id - 1)] = json_real(value, "injection at node " + key);
    }
  }

  Network network(n, std::move(edges), reference, std::move(p));
  throw_if_invalid(network);
  return network;
}

Network load_network_json_text(const std::string& text) {
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  return load_network_json(document);
}

Network load_network_csv(const std::string& edges_csv, const std::string& injections_csv) {
  auto rows = parse_csv(edges_csv, "edges.csv");
  const std::vector<std::string> expected = {"from", "to", "b", "cap"};
  const auto& header = rows.front();
  if (header.size() < 3 || header.size() > 4 ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    throw ParseError("edges.csv header must be from,to,b,cap");
  }

  std::vector<Edge> edges;
  std::size_t n = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string context = "edges.csv row " + std::to_string(r + 1);
    if (row.size() != header.size() && !(row.size() == 3 && header.size() == 4)) {
      throw ParseError(context + ": wrong number of fields");
    }
    std::size_t from = parse_node_id(row[0], context);
    std::size_t to = parse_node_id(row[1], context);
    Edge edge{from - 1, to - 1, parse_real(row[2], context), kInfiniteCapacity};
    if (row.size() == 4 && !row[3].empty()) edge.capacity = parse_real(row[3], context);
    n = std::max({n, from, to});
    edges.push_back(edge);
  }

  std::vector<std::pair<std::size_t, double>> injections;
  if (!injections_csv.empty()) {
    auto injection_rows = parse_csv(injections_csv, "injections.csv");
    if (injection_rows.front() != std::vector<std::string>{"node", "p"}) {
      throw ParseError("injections.csv header must be node,p");
    }
    for (std::size_t r = 1; r < injection_rows.size(); ++r) {
      const auto& row = injection_rows[r];
      const std::string context = "injections.csv row " + std::to_string(r + 1);
      if (row.size() != 2) throw ParseError(context + ": wrong number of fields");
      std::size_t id = parse_node_id(row[0], context);
      n = std::max(n, id);
      injections.emplace_back(id, parse_real(row[1], context));
    }
  }

  InjectionVector p = InjectionVector::Zero(static_cast<Eigen::Index>(n));
  for (auto [id, value] : injections) p[static_cast<Eigen::Index>(id - 1)] = value;
  Network network(n, std::move(edges), n == 0 ? 0 : n - 1, std::move(p));
  throw_if_invalid(network);
  return network;
}

Network load_network(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    fs::path injections = path / "injections.csv";
    return load_network_csv(read_file(path / "edges.csv"),
                            fs::exists(injections) ? read_file(injections) : std::string{});
  }
  if (path.extension() == ".csv") {
    fs::path injections = path.parent_path() / "injections.csv";
    return load_network_csv(read_file(path),
                            fs::exists(injections) && injections != path ? read_file(injections)
                                                                         : std::string{});
  }
  return load_network_json_text(read_file(path));
}

nlohmann::json to_json(const Network& network) {
  nlohmann::json document;
  document["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < network.node_count(); ++i) document["nodes"].push_back(i + 1);
  document["reference"] = network.reference() + 1;
  document["edges"] = nlohmann::json::array();
  for (const Edge& edge : network.edges()) {
    nlohmann::json item{{"from", edge.source + 1}, {"to", edge.target + 1}, {"b", edge.susceptance}};
    if (std::isinf(edge.capacity)) {
      item["cap"] = "inf";
    } else {
      item["cap"] = edge.capacity;
    }
    document["edges"].push_back(std::move(item));
  }
  nlohmann::json injections = nlohmann::json::object();
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    injections[std::to_string(i + 1)] = network.injections()[static_cast<Eigen::Index>(i)];
  }
  document["injections"] = std::move(injections);
  return document;
}

}  // namespace gridfactor
