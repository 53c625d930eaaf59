#include "gridfactor/localization.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "gridfactor/errors.hpp"

namespace gridfactor {

namespace {

using Index = Eigen::Index;

Index at(std::size_t k) { return static_cast<Index>(k); }

std::vector<std::size_t> positions(const EdgeSet& subset, std::size_t m) {
  std::vector<std::size_t> pos(m, m);
  for (std::size_t k = 0; k < subset.size(); ++k) pos[subset[k]] = k;
  return pos;
}

Eigen::MatrixXd right_solve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) {
  // x * m^{-1}
  return Eigen::PartialPivLU<Eigen::MatrixXd>(m.transpose()).solve(x.transpose()).transpose();
}

Eigen::MatrixXd incidence_columns(const IncidenceMatrix& c, const EdgeSet& edges) {
  Eigen::MatrixXd out(c.rows(), at(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) out.col(at(k)) = c.col(at(edges[k]));
  return out;
}

Eigen::VectorXd pick(const Eigen::VectorXd& v, const EdgeSet& edges) {
  Eigen::VectorXd out(at(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) out[at(k)] = v[at(edges[k])];
  return out;
}

void require_non_bridges(const BlockDecomposition& blocks, const EdgeSet& outage) {
  for (EdgeIndex l : outage) {
    if (blocks.is_bridge(l)) throw BridgeOutageError("line " + std::to_string(l + 1) + " is a bridge");
  }
}

}  // namespace

std::string_view to_string(CyclePrediction prediction) {
  return prediction == CyclePrediction::zero ? "zero" : "possibly_nonzero";
}

CyclePrediction simple_cycle_criterion(const Network& network, const BlockDecomposition& blocks,
                                       EdgeIndex l, EdgeIndex l_hat) {
  for (EdgeIndex e : {l, l_hat}) {
    if (e >= network.edge_count()) throw UnknownEdgeError("line " + std::to_string(e + 1));
  }
  if (l == l_hat) throw std::invalid_argument("l and l_hat must differ");
  if (blocks.is_bridge(l_hat)) {
    throw BridgeOutageError("line " + std::to_string(l_hat + 1) + " is a bridge");
  }
  return shares_simple_cycle(network, blocks, l, l_hat) ? CyclePrediction::possibly_nonzero
                                                        : CyclePrediction::zero;
}

bool LocalizationReport::localized() const {
  const double bound = zero_tolerance * k_f_max;
  return cross_block_max <= bound && stack_cross_block_max <= bound;
}

double LocalizationReport::max_block_residual() const {
  double worst = 0.0;
  for (const auto& block : blocks) worst = std::max(worst, block.residual);
  return worst;
}

LocalizationReport block_structure_report(const Network& network, const LaplacianBundle& bundle,
                                          const PtdfMatrix& ptdf, const BlockDecomposition& blocks,
                                          const GlodfResult& result, double zero_tolerance) {
  const EdgeSet& f = result.outage.outaged();
  const EdgeSet& rest = result.outage.surviving();
  if (is_cut_set(network, f)) throw CutSetError("removing the outage set disconnects the network");

  const std::size_t m = network.edge_count();
  const auto row_of = positions(rest, m);
  const auto col_of = positions(f, m);
  const Eigen::MatrixXd& k_f = result.k_f;

  LocalizationReport report;
  report.outaged = f;
  report.zero_tolerance = zero_tolerance;
  report.k_f_max = k_f.size() ? k_f.cwiseAbs().maxCoeff() : 0.0;

  for (std::size_t r = 0; r < rest.size(); ++r) {
    for (std::size_t c = 0; c < f.size(); ++c) {
      const double value = std::abs(k_f(at(r), at(c)));
      if (blocks.block_of[rest[r]] != blocks.block_of[f[c]]) {
        report.cross_block_max = std::max(report.cross_block_max, value);
        report.stack_cross_block_max =
            std::max(report.stack_cross_block_max, std::abs(result.k_stack(at(r), at(c))));
      } else {
        ++report.within_block_pairs;
        if (value < zero_tolerance * report.k_f_max) ++report.within_block_zero_count;
      }
    }
  }

  Eigen::MatrixXd reassembled = Eigen::MatrixXd::Zero(k_f.rows(), k_f.cols());
  const Eigen::MatrixXd& a = bundle.a();
  const Eigen::VectorXd& b = bundle.susceptances();

  for (std::size_t k = 0; k < blocks.block_count(); ++k) {
    BlockReport piece;
    piece.block = k;
    for (EdgeIndex l : blocks.blocks[k]) {
      (col_of[l] < m ? piece.outaged : piece.surviving).push_back(l);
    }
    if (piece.outaged.empty()) continue;
    std::sort(piece.outaged.begin(), piece.outaged.end());
    std::sort(piece.surviving.begin(), piece.surviving.end());

    const auto nk = at(piece.outaged.size());
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(nk, nk);
    piece.d_minus = ptdf.block(piece.surviving, piece.outaged);
    piece.d_k = ptdf.block(piece.outaged, piece.outaged);
    const Eigen::VectorXd gaps = Eigen::VectorXd::Ones(nk) - piece.d_k.diagonal();
    piece.k_k = piece.d_minus * gaps.cwiseInverse().asDiagonal();
    piece.k_f = right_solve(piece.d_minus, identity - piece.d_k);
    piece.k_f_stack = right_solve(piece.k_k * gaps.asDiagonal(), identity - piece.d_k);

    const Eigen::MatrixXd c_minus = incidence_columns(bundle.incidence(), piece.surviving);
    const Eigen::MatrixXd c_k = incidence_columns(bundle.incidence(), piece.outaged);
    const Eigen::MatrixXd d_minus_bc = pick(b, piece.surviving).asDiagonal() * (c_minus.transpose() * a * c_k);
    const Eigen::MatrixXd d_k_bc = pick(b, piece.outaged).asDiagonal() * (c_k.transpose() * a * c_k);
    piece.k_f_incidence = right_solve(d_minus_bc, identity - d_k_bc);

    for (std::size_t r = 0; r < piece.surviving.size(); ++r) {
      for (std::size_t c = 0; c < piece.outaged.size(); ++c) {
        const Index row = at(row_of[piece.surviving[r]]);
        const Index col = at(col_of[piece.outaged[c]]);
        const double full = k_f(row, col);
        reassembled(row, col) = piece.k_f(at(r), at(c));
        for (const Eigen::MatrixXd* candidate : {&piece.k_f, &piece.k_f_stack, &piece.k_f_incidence}) {
          piece.residual = std::max(piece.residual, std::abs((*candidate)(at(r), at(c)) - full));
        }
      }
    }
    report.blocks.push_back(std::move(piece));
  }
  report.reassembly_residual = k_f.size() ? (reassembled - k_f).cwiseAbs().maxCoeff() : 0.0;
  return report;
}

PerturbationStatistics almost_sure_nonzero_test(const Network& network, const EdgeSet& outage,
                                                const PerturbationSpec& spec, double zero_tolerance) {
  if (!(spec.relative_magnitude >= 0.0 && spec.relative_magnitude < 1.0)) {
    throw std::invalid_argument("perturbation magnitude must lie in [0, 1)");
  }
  if (spec.trials == 0) throw std::invalid_argument("at least one trial is required");

  const OutageSet f(network, outage);
  if (is_cut_set(network, f.outaged())) throw CutSetError("removing the outage set disconnects the network");
  const BlockDecomposition blocks = block_decomposition(network);
  require_non_bridges(blocks, f.outaged());

  auto evaluate = [&](const Network& net) {
    const LaplacianBundle bundle(net);
    return glodf(bundle, ptdf_matrix(bundle, net), net, f).k_f;
  };

  PerturbationStatistics stats;
  stats.spec = spec;
  stats.outaged = f.outaged();
  const Eigen::MatrixXd base = evaluate(network);
  const double base_max = base.size() ? base.cwiseAbs().maxCoeff() : 0.0;
  for (std::size_t r = 0; r < f.surviving().size(); ++r) {
    for (std::size_t c = 0; c < f.size(); ++c) {
      PairStatistic pair;
      pair.line = f.surviving()[r];
      pair.outage = f.outaged()[c];
      pair.same_block = blocks.block_of[pair.line] == blocks.block_of[pair.outage];
      pair.unperturbed = base(at(r), at(c));
      if (pair.same_block) {
        ++stats.within_block_pairs;
        if (std::abs(pair.unperturbed) <= zero_tolerance * base_max) ++stats.within_block_unperturbed_zero;
      }
      stats.pairs.push_back(pair);
    }
  }

  const Eigen::VectorXd b = network.susceptances();
  std::size_t within_nonzero_draws = 0;
  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> omega(-spec.relative_magnitude, spec.relative_magnitude);
    Eigen::VectorXd perturbed(b.size());
    for (Index l = 0; l < b.size(); ++l) perturbed[l] = b[l] * (1.0 + omega(rng));

    const Eigen::MatrixXd k_f = evaluate(network.with_susceptances(perturbed));
    const double k_max = k_f.size() ? k_f.cwiseAbs().maxCoeff() : 0.0;
    for (std::size_t r = 0; r < f.surviving().size(); ++r) {
      for (std::size_t c = 0; c < f.size(); ++c) {
        PairStatistic& pair = stats.pairs[r * f.size() + c];
        const double value = std::abs(k_f(at(r), at(c)));
        if (pair.same_block) {
          if (value > kNonzeroThreshold) {
            ++pair.nonzero_trials;
            ++within_nonzero_draws;
          }
        } else if (value > zero_tolerance * k_max) {
          ++pair.nonzero_trials;
          ++stats.cross_block_nonzero_events;
        }
      }
    }
  }
  for (const auto& pair : stats.pairs) {
    if (pair.same_block && pair.nonzero_trials == spec.trials) ++stats.within_block_always_nonzero;
  }
  if (stats.within_block_pairs > 0) {
    stats.within_block_nonzero_fraction =
        static_cast<double>(within_nonzero_draws) / static_cast<double>(stats.within_block_pairs * spec.trials);
  }
  return stats;
}

AdversarialInstance adversarial_capacity(const LaplacianBundle& bundle, const Network& network,
                                         EdgeIndex e, EdgeIndex e_hat, double zero_tolerance) {
  const std::size_t m = network.edge_count();
  for (EdgeIndex x : {e, e_hat}) {
    if (x >= m) throw UnknownEdgeError("line " + std::to_string(x + 1));
  }
  if (e == e_hat) throw std::invalid_argument("e and e_hat must differ");
  const BlockDecomposition blocks = block_decomposition(network);
  if (blocks.is_bridge(e)) throw BridgeOutageError("line " + std::to_string(e + 1) + " is a bridge");

  AdversarialInstance out;
  out.e = e;
  out.e_hat = e_hat;
  out.injections = characteristic_injection(network, e);
  out.pre_flows = solve_flow(bundle, network, out.injections).flows;

  const double f_e = out.pre_flows[at(e)];
  const double gap = 1.0 - f_e;  // f_e = D_ee under the characteristic injection
  Eigen::VectorXd k_col = out.pre_flows / gap;
  k_col[at(e)] = 0.0;
  out.lodf = k_col[at(e_hat)];
  out.lodf_norm = k_col.cwiseAbs().maxCoeff();
  if (std::abs(out.lodf) <= zero_tolerance * out.lodf_norm) {
    throw ZeroFactorError("K is zero for lines " + std::to_string(e_hat + 1) + " and " + std::to_string(e + 1));
  }

  out.post_flows = out.pre_flows + k_col * f_e;
  out.post_flows[at(e)] = 0.0;

  const double flow_norm = out.pre_flows.cwiseAbs().maxCoeff();
  out.capacities = Eigen::VectorXd::Constant(at(m), (1.0 + out.lodf_norm) * flow_norm);
  out.capacities[at(e_hat)] = std::abs(out.pre_flows[at(e_hat)]);
  return out;
}

}  // namespace gridfactor
