#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridfactor/dcpf.hpp"
#include "gridfactor/factors.hpp"
#include "gridfactor/graph.hpp"
#include "gridfactor/network.hpp"

namespace gridfactor {

inline constexpr double kZeroTolerance = 1e-9;

enum class CyclePrediction { zero, possibly_nonzero };

[[nodiscard]] std::string_view to_string(CyclePrediction prediction);

/// zero iff no simple cycle contains both l and l_hat. Throws
/// BridgeOutageError when l_hat is a bridge and std::invalid_argument when
/// l == l_hat.
[[nodiscard]] CyclePrediction simple_cycle_criterion(const Network& network,
                                                     const BlockDecomposition& blocks, EdgeIndex l,
                                                     EdgeIndex l_hat);

/// Per-block pieces for one block k that contains tripped lines.
struct BlockReport {
  std::size_t block = 0;
  EdgeSet outaged;   // F_k
  EdgeSet surviving; // F_{-k}
  Eigen::MatrixXd d_minus;       // D_{-k}
  Eigen::MatrixXd d_k;           // D_k
  Eigen::MatrixXd k_k;           // K_k = D_{-k}(I - diag D_k)^{-1}
  Eigen::MatrixXd k_f;           // K^F_k = D_{-k}(I - D_k)^{-1}
  Eigen::MatrixXd k_f_stack;     // K_k (I - diag D_k)(I - D_k)^{-1}
  Eigen::MatrixXd k_f_incidence; // B_{-k}C_{-k}^T A C_k (I - B_k C_k^T A C_k)^{-1}
  double residual = 0.0;         // worst deviation of the three from K^F on (F_{-k}, F_k)
};

struct LocalizationReport {
  EdgeSet outaged;
  std::vector<BlockReport> blocks;
  double k_f_max = 0.0;                 // max |K^F|
  double cross_block_max = 0.0;         // max |K^F| over pairs in different blocks
  double stack_cross_block_max = 0.0;   // the same for K_{-FF}
  double reassembly_residual = 0.0;     // block-diagonal reassembly vs K^F
  std::size_t within_block_pairs = 0;
  std::size_t within_block_zero_count = 0;
  double zero_tolerance = kZeroTolerance;

  /// Cross-block entries of K^F and K_{-FF} vanish relative to max |K^F|.
  [[nodiscard]] bool localized() const;
  [[nodiscard]] double max_block_residual() const;
};

/// Throws CutSetError when the outage disconnects the network.
[[nodiscard]] LocalizationReport block_structure_report(const Network& network,
                                                        const LaplacianBundle& bundle,
                                                        const PtdfMatrix& ptdf,
                                                        const BlockDecomposition& blocks,
                                                        const GlodfResult& result,
                                                        double zero_tolerance = kZeroTolerance);

struct PerturbationSpec {
  double relative_magnitude = 1e-3;  // epsilon, must lie in [0, 1)
  std::size_t trials = 100;
  std::uint64_t seed = 0;
};

struct PairStatistic {
  EdgeIndex line = 0;
  EdgeIndex outage = 0;
  bool same_block = false;
  double unperturbed = 0.0;
  std::size_t nonzero_trials = 0;
};

struct PerturbationStatistics {
  PerturbationSpec spec;
  EdgeSet outaged;
  std::vector<PairStatistic> pairs;  // row-major over (-F, F)
  std::size_t within_block_pairs = 0;
  std::size_t within_block_always_nonzero = 0;
  std::size_t within_block_unperturbed_zero = 0;
  std::size_t cross_block_nonzero_events = 0;
  double within_block_nonzero_fraction = 0.0;  // over all (pair, trial) draws
};

inline constexpr double kNonzeroThreshold = 1e-12;

/// Redraws B_l(1 + w_l) with w_l uniform in [-eps, eps] for every trial and
/// counts how often each K^F entry is nonzero: |K| > 1e-12 for pairs in the
/// same block, |K| > zero_tolerance * max|K^F| for pairs in different blocks.
/// Trial t draws from its own stream seeded by (seed, t).
[[nodiscard]] PerturbationStatistics almost_sure_nonzero_test(const Network& network,
                                                              const EdgeSet& outage,
                                                              const PerturbationSpec& spec,
                                                              double zero_tolerance = kZeroTolerance);

struct AdversarialInstance {
  EdgeIndex e = 0;
  EdgeIndex e_hat = 0;
  InjectionVector injections;   // characteristic injection of e
  Eigen::VectorXd capacities;
  Eigen::VectorXd pre_flows;    // column e of D
  Eigen::VectorXd post_flows;   // f + K_{:,e} f_e, zero on e
  double lodf = 0.0;            // K_{e_hat e}
  double lodf_norm = 0.0;       // max_u |K_{u e}|
};

/// Capacities that are met before e trips and violated only on e_hat after.
/// Throws BridgeOutageError when e is a bridge and ZeroFactorError when
/// |K_{e_hat e}| is below zero_tolerance * max_u |K_{u e}|.
[[nodiscard]] AdversarialInstance adversarial_capacity(const LaplacianBundle& bundle,
                                                       const Network& network, EdgeIndex e,
                                                       EdgeIndex e_hat,
                                                       double zero_tolerance = kZeroTolerance);

}  // namespace gridfactor
