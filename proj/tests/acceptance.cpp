#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gridfactor/cascade.hpp"
#include "gridfactor/cli.hpp"
#include "gridfactor/dcpf.hpp"
#include "gridfactor/errors.hpp"
#include "gridfactor/factors.hpp"
#include "gridfactor/forests.hpp"
#include "gridfactor/graph.hpp"
#include "gridfactor/localization.hpp"
#include "support/graphs.hpp"

using namespace gridfactor;
using Index = Eigen::Index;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) detail = what;
    passed = passed && ok;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<Network> forest_corpus() {
  std::mt19937_64 rng(20240501);
  std::vector<Network> corpus;
  for (int k = 0; k < 200; ++k) corpus.push_back(testing::random_connected(rng, {2, 8, 0.35, 0.5, 2.0}));
  return corpus;
}

struct GlodfInstance {
  Network net;
  EdgeSet outage;
};

std::vector<GlodfInstance> glodf_corpus() {
  std::mt19937_64 rng(20240502);
  std::vector<GlodfInstance> out;
  while (out.size() < 200) {
    Network net = testing::random_connected(rng, {3, 10, 0.3});
    std::vector<EdgeIndex> lines(net.edge_count());
    for (std::size_t k = 0; k < lines.size(); ++k) lines[k] = k;
    std::shuffle(lines.begin(), lines.end(), rng);
    std::uniform_int_distribution<std::size_t> size(1, std::min<std::size_t>(3, net.edge_count() - 1));
    EdgeSet f(lines.begin(), lines.begin() + static_cast<long>(size(rng)));
    std::sort(f.begin(), f.end());
    if (!testing::connected_without(net, f)) continue;
    out.push_back({std::move(net), std::move(f)});
  }
  return out;
}

Outcome matrix_tree(const std::vector<Network>& corpus) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& net : corpus) {
    const MatrixTreeReport report = matrix_tree_check(net, 1e-9);
    o.require(report.passed(), "identity failed on a graph with " + std::to_string(net.node_count()) + " nodes");
    // Independent determinant via Eigen's dense LU.
    const LaplacianBundle bundle(net);
    const double det = bundle.reduced_laplacian().rows() ? bundle.reduced_laplacian().determinant() : 1.0;
    o.require(testing::close(det, report.checks.front().forest, 1e-9, 0.0), "tree weight differs from LU determinant");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(seconds < 60.0, "runtime " + fmt(seconds) + " s");
  if (o.passed) o.detail = "200 graphs, " + fmt(seconds) + " s";
  return o;
}

Outcome spectral(const std::vector<Network>& corpus) {
  Outcome o;
  double worst = 0.0;
  for (const auto& net : corpus) {
    const LaplacianBundle bundle(net);
    // Dense inversion of the reduced Laplacian, padded at the reference.
    const Index n = Index(net.node_count());
    const Index ref = Index(net.reference());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd inv = bundle.reduced_laplacian().inverse();
    for (Index i = 0, ri = 0; i < n; ++i) {
      if (i == ref) continue;
      for (Index j = 0, rj = 0; j < n; ++j) {
        if (j == ref) continue;
        a(i, j) = inv(ri, rj++);
      }
      ++ri;
    }
    ForestOracle oracle(net);
    const double scale = std::max(1.0, max_abs(a));
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double err = std::abs(a(i, j) - oracle.a_entry(NodeIndex(i), NodeIndex(j))) / scale;
        worst = std::max(worst, err);
      }
    }
  }
  o.require(worst <= 1e-9, "max error " + fmt(worst));
  if (o.passed) o.detail = "max relative error " + fmt(worst);
  return o;
}

Outcome ptdf_lodf(const std::vector<Network>& corpus) {
  Outcome o;
  double worst = 0.0;
  for (const auto& net : corpus) {
    const LaplacianBundle bundle(net);
    const PtdfMatrix d = ptdf_matrix(bundle, net);
    const auto blocks = block_decomposition(net);
    ForestOracle oracle(net);
    const double scale = std::max(1.0, max_abs(d.values));
    for (EdgeIndex h = 0; h < net.edge_count(); ++h) {
      const Edge& e = net.edge(h);
      for (EdgeIndex l = 0; l < net.edge_count(); ++l) {
        worst = std::max(worst, std::abs(d(l, h) - oracle.ptdf(l, e.source, e.target)) / scale);
      }
      if (blocks.is_bridge(h)) continue;
      const double gap = 1.0 - d(h, h);
      for (EdgeIndex l = 0; l < net.edge_count(); ++l) {
        if (l == h) continue;
        const double k = d(l, h) / gap;
        worst = std::max(worst, std::abs(k - oracle.lodf(l, h)) / std::max(1.0, std::abs(k)));
      }
    }
  }
  o.require(worst <= 1e-9, "max error " + fmt(worst));
  if (o.passed) o.detail = "max relative error " + fmt(worst);
  return o;
}

Outcome glodf_agreement(const std::vector<GlodfInstance>& corpus) {
  Outcome o;
  double worst = 0.0;
  double worst_flow = 0.0;
  std::mt19937_64 rng(20240503);
  for (const auto& inst : corpus) {
    const LaplacianBundle bundle(inst.net);
    const PtdfMatrix d = ptdf_matrix(bundle, inst.net);
    const OutageSet f(inst.net, inst.outage);
    const auto post = glodf(bundle, d, inst.net, f, GlodfMethod::post_contingency).k_f;
    const auto pre = glodf(bundle, d, inst.net, f, GlodfMethod::pre_contingency).k_f;
    const auto stack = glodf(bundle, d, inst.net, f, GlodfMethod::via_stack).k_f;
    const double scale = std::max(1.0, max_abs(pre));
    worst = std::max({worst, max_abs(post - pre) / scale, max_abs(stack - pre) / scale});

    const InjectionVector p = testing::random_balanced(rng, inst.net.node_count());
    const OutageFlows flows = apply_outage(bundle, inst.net, p, f);
    Eigen::VectorXd f_f(Index(f.size()));
    for (std::size_t k = 0; k < f.size(); ++k) f_f[Index(k)] = flows.pre.flows[Index(f.outaged()[k])];
    const Eigen::VectorXd predicted = pre * f_f;
    for (std::size_t k = 0; k < f.surviving().size(); ++k) {
      const Index l = Index(f.surviving()[k]);
      const double expected = flows.pre.flows[l] + predicted[Index(k)];
      worst_flow = std::max(worst_flow, std::abs(flows.post.flows[l] - expected) /
                                            std::max(1.0, std::abs(expected)));
    }
  }
  o.require(worst <= 1e-9, "formula disagreement " + fmt(worst));
  o.require(worst_flow <= 1e-9, "post-flow error " + fmt(worst_flow));
  if (o.passed) o.detail = "200 instances, formulas " + fmt(worst) + ", flows " + fmt(worst_flow);
  return o;
}

Outcome localization(const std::vector<GlodfInstance>& corpus) {
  Outcome o;
  double worst_cross = 0.0;
  double worst_block = 0.0;
  for (const auto& inst : corpus) {
    const LaplacianBundle bundle(inst.net);
    const PtdfMatrix d = ptdf_matrix(bundle, inst.net);
    const auto blocks = block_decomposition(inst.net);
    const OutageSet f(inst.net, inst.outage);
    const GlodfResult r = glodf(bundle, d, inst.net, f);
    // Cross-block entries read straight off K^F using the block labels.
    const double kmax = max_abs(r.k_f);
    double cross = 0.0;
    for (std::size_t i = 0; i < f.surviving().size(); ++i) {
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (blocks.block_of[f.surviving()[i]] != blocks.block_of[f.outaged()[j]]) {
          cross = std::max(cross, std::abs(r.k_f(Index(i), Index(j))));
        }
      }
    }
    if (kmax > 0) worst_cross = std::max(worst_cross, cross / kmax);
    o.require(kmax == 0 || cross < 1e-9 * kmax, "cross-block entry " + fmt(cross));
    const LocalizationReport report = block_structure_report(inst.net, bundle, d, blocks, r);
    const double scale = std::max(1.0, kmax);
    worst_block = std::max({worst_block, report.max_block_residual() / scale, report.reassembly_residual / scale});
  }
  o.require(worst_block <= 1e-9, "block reassembly " + fmt(worst_block));
  if (o.passed) o.detail = "cross-block ratio " + fmt(worst_cross) + ", reassembly " + fmt(worst_block);
  return o;
}

Outcome almost_sure() {
  Outcome o;
  const Network k4 = testing::complete4();
  std::size_t zeros = 0;
  std::size_t always = 0;
  std::size_t pairs = 0;
  for (EdgeIndex h = 0; h < k4.edge_count(); ++h) {
    const PerturbationStatistics stats = almost_sure_nonzero_test(k4, {h}, {1e-3, 100, 42});
    for (const auto& pair : stats.pairs) {
      const Edge& a = k4.edge(pair.line);
      const Edge& b = k4.edge(pair.outage);
      const bool adjacent = a.source == b.source || a.source == b.target || a.target == b.source ||
                            a.target == b.target;
      ++pairs;
      if (pair.nonzero_trials == 100) ++always;
      if (!adjacent) {
        o.require(std::abs(pair.unperturbed) < 1e-12, "non-adjacent pair not zero before perturbation");
        ++zeros;
      }
    }
  }
  o.require(always == pairs, std::to_string(always) + "/" + std::to_string(pairs) + " pairs always nonzero");
  o.require(zeros == 6, "expected 6 symmetric zeros, found " + std::to_string(zeros));
  if (o.passed) o.detail = "100/100 trials nonzero for all " + std::to_string(pairs) + " pairs, " +
                           std::to_string(zeros) + " unperturbed zeros";
  return o;
}

Outcome triangle() {
  Outcome o;
  const Network tri = testing::triangle();
  const LaplacianBundle bundle(tri);
  const PtdfMatrix d = ptdf_matrix(bundle, tri);
  const LodfColumn k = lodf_single(d, block_decomposition(tri), 0);
  ForestOracle oracle(tri);
  o.require(std::abs(k.values[1] - 1.0) <= 1e-12 && std::abs(oracle.lodf(2, 0) - 1.0) <= 1e-12,
            "K_(1,3),(1,2) != 1");
  o.require(std::abs(k.values[0] + 1.0) <= 1e-12 && std::abs(oracle.lodf(1, 0) + 1.0) <= 1e-12,
            "K_(2,3),(1,2) != -1");
  o.require(std::abs(d(0, 0) - 2.0 / 3) <= 1e-12 && std::abs(oracle.ptdf(0, 0, 1) - 2.0 / 3) <= 1e-12,
            "D_ll != 2/3");
  const EffectiveReactance r = oracle.effective_reactance(0);
  // L-dagger oracle: R = (e_i - e_j)^T L^+ (e_i - e_j).
  const Eigen::MatrixXd pinv = bundle.pseudo_inverse();
  const double r_pinv = pinv(0, 0) + pinv(1, 1) - 2 * pinv(0, 1);
  o.require(std::abs(r.effective - 2.0 / 3) <= 1e-12 && std::abs(r_pinv - 2.0 / 3) <= 1e-12, "R != 2/3");
  if (o.passed) o.detail = "K = (+1, -1), D_ll = 2/3, R = 2/3";
  return o;
}

Outcome bridges(const std::vector<Network>& corpus) {
  Outcome o;
  std::size_t bridges_seen = 0;
  std::size_t sets = 0;
  for (const auto& net : corpus) {
    const LaplacianBundle bundle(net);
    const PtdfMatrix d = ptdf_matrix(bundle, net);
    const auto blocks = block_decomposition(net);
    for (EdgeIndex l = 0; l < net.edge_count(); ++l) {
      const bool bridge = !testing::connected_without(net, {l});
      o.require(bridge == blocks.is_bridge(l), "bridge classification");
      if (!bridge) continue;
      ++bridges_seen;
      o.require(std::abs(d(l, l) - 1.0) <= 1e-12, "D_ll = " + fmt(d(l, l)) + " on a bridge");
      bool raised = false;
      try {
        (void)lodf_single(d, blocks, l);
      } catch (const BridgeOutageError&) {
        raised = true;
      }
      o.require(raised, "lodf_single accepted a bridge");
    }
    if (net.edge_count() > 10) continue;
    for (const auto& f : testing::subsets_up_to(net.edge_count(), 2)) {
      if (f.size() == net.edge_count()) continue;
      ++sets;
      const bool islands = detect_islanding(d, OutageSet(net, f));
      o.require(islands == is_cut_set(net, f), "islanding detection disagrees with cut set");
      o.require(islands == !testing::connected_without(net, f), "islanding detection disagrees with BFS");
    }
  }
  if (o.passed) o.detail = std::to_string(bridges_seen) + " bridges, " + std::to_string(sets) + " outage sets";
  return o;
}

Outcome adversarial() {
  Outcome o;
  const Network tri = testing::triangle();
  const LaplacianBundle bundle(tri);
  const EdgeIndex e = 0;
  const EdgeIndex e_hat = 2;
  const AdversarialInstance inst = adversarial_capacity(bundle, tri, e, e_hat);
  const Network net = tri.with_capacities(inst.capacities);
  for (EdgeIndex l = 0; l < 3; ++l) {
    o.require(std::abs(inst.pre_flows[Index(l)]) <= inst.capacities[Index(l)], "line unsafe before the outage");
  }
  const CascadeTrace trace = run_cascade(net, inst.injections, {e});
  o.require(trace.stages.size() >= 2 && trace.stages[1].tripped == EdgeSet{e_hat}, "stage 1 trips differ");
  o.require(trace.status == CascadeStatus::islanded && trace.islanded_stage == std::size_t{2},
            "expected islanded at stage 2");
  if (o.passed) o.detail = "e_hat tripped at stage 1, islanded at stage 2";
  return o;
}

Outcome injection_independence() {
  Outcome o;
  std::mt19937_64 rng(20240504);
  double worst = 0.0;
  std::size_t samples = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Network net = testing::random_connected(rng, {3, 9});
    const LaplacianBundle bundle(net);
    const PtdfMatrix d = ptdf_matrix(bundle, net);
    const auto blocks = block_decomposition(net);
    for (EdgeIndex h = 0; h < net.edge_count(); ++h) {
      if (blocks.is_bridge(h)) continue;
      const LodfColumn k = lodf_single(d, blocks, h);
      for (int draw = 0; draw < 10; ++draw) {
        const InjectionVector p = testing::random_balanced(rng, net.node_count());
        // Re-solve on the surviving network independently of the outage code.
        EdgeSet kept;
        for (EdgeIndex l = 0; l < net.edge_count(); ++l) {
          if (l != h) kept.push_back(l);
        }
        const Network sub = net.subnetwork(kept);
        const FlowState before = solve_flow(bundle, net, p);
        const FlowState after = solve_flow(LaplacianBundle(sub), sub, p);
        const double f_h = before.flows[Index(h)];
        if (std::abs(f_h) <= 1e-6) continue;
        for (std::size_t i = 0; i < kept.size(); ++i) {
          const double ratio = (after.flows[Index(i)] - before.flows[Index(kept[i])]) / f_h;
          worst = std::max(worst, std::abs(ratio - k.values[Index(i)]));
          ++samples;
        }
      }
    }
  }
  o.require(worst <= 1e-8, "max deviation " + fmt(worst));
  if (o.passed) o.detail = std::to_string(samples) + " ratios, max deviation " + fmt(worst);
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::string dir = GRIDFACTOR_DATA_DIR;
  const std::vector<std::vector<std::string>> commands = {
      {"verify", dir + "/triangle.json"},
      {"verify", "--exact", dir + "/triangle.json"},
      {"--seed", "42", "localize", dir + "/k4.json", "--lines", "1", "--perturb"},
      {"--seed", "42", "localize", dir + "/two_blocks.json", "--lines", "1,7", "--perturb"},
  };
  for (const auto& args : commands) {
    std::ostringstream out1, err1, out2, err2;
    const int c1 = cli::run(args, out1, err1);
    const int c2 = cli::run(args, out2, err2);
    o.require(c1 == 0 && c2 == 0, args.front() + " failed: " + err1.str());
    o.require(out1.str() == out2.str() && !out1.str().empty(), "output differs for " + args.front());
  }
  if (o.passed) o.detail = std::to_string(commands.size()) + " commands byte-identical";
  return o;
}

}  // namespace

int main() {
  const auto corpus = forest_corpus();
  const auto glodfs = glodf_corpus();
  const std::vector<std::function<Outcome()>> criteria = {
      [&] { return matrix_tree(corpus); },
      [&] { return spectral(corpus); },
      [&] { return ptdf_lodf(corpus); },
      [&] { return glodf_agreement(glodfs); },
      [&] { return localization(glodfs); },
      [] { return almost_sure(); },
      [] { return triangle(); },
      [&] { return bridges(corpus); },
      [] { return adversarial(); },
      [] { return injection_independence(); },
      [] { return determinism(); },
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome outcome;
    try {
      outcome = criteria[k]();
    } catch (const std::exception& error) {
      outcome = {false, std::string("exception: ") + error.what()};
    }
    std::printf("criterion %zu: %s (%s)\n", k + 1, outcome.passed ? "PASS" : "FAIL", outcome.detail.c_str());
    if (!outcome.passed) ++failures;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
