#include "gridfactor/dcpf.hpp"

#include <cmath>
#include <string>

#include "gridfactor/errors.hpp"

namespace gridfactor {

Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& m, Eigen::Index skip_row, Eigen::Index skip_col) {
  Eigen::MatrixXd out(m.rows() - 1, m.cols() - 1);
  for (Eigen::Index i = 0, oi = 0; i < m.rows(); ++i) {
    if (i == skip_row) continue;
    for (Eigen::Index j = 0, oj = 0; j < m.cols(); ++j) {
      if (j == skip_col) continue;
      out(oi, oj++) = m(i, j);
    }
    ++oi;
  }
  return out;
}

LaplacianBundle::LaplacianBundle(const Network& network)
    : incidence_(incidence_matrix(network)),
      susceptances_(network.susceptances()),
      reference_(network.reference()) {
  const auto n = static_cast<Eigen::Index>(network.node_count());
  if (n < 2) throw SingularError("a network needs at least two nodes");
  laplacian_ = incidence_ * susceptances_.asDiagonal() * incidence_.transpose();

  const auto ref = static_cast<Eigen::Index>(reference_);
  reduced_ = drop_row_col(laplacian_, ref, ref);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced_);
  const double scale = reduced_.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd& factors = lu.matrixLU();
  for (Eigen::Index k = 0; k < factors.rows(); ++k) {
    if (!(std::abs(factors(k, k)) >= 1e-12 * scale)) {
      throw SingularError("reduced Laplacian pivot " + std::to_string(k + 1) +
                          " vanishes; the graph is disconnected");
    }
  }
  determinant_ = lu.determinant();

  const Eigen::MatrixXd inverse = lu.inverse();
  a_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0, ri = 0; i < n; ++i) {
    if (i == ref) continue;
    for (Eigen::Index j = 0, rj = 0; j < n; ++j) {
      if (j == ref) continue;
      a_(i, j) = inverse(ri, rj++);
    }
    ++ri;
  }
  // Symmetrize away rounding asymmetry of the LU inverse.
  a_ = 0.5 * (a_ + a_.transpose()).eval();
}

Eigen::MatrixXd LaplacianBundle::pseudo_inverse() const {
  const auto n = laplacian_.rows();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd shifted = laplacian_ + ones;
  return shifted.partialPivLu().inverse() - ones;
}

namespace {

FlowState flows_from_angles(const LaplacianBundle& bundle, Eigen::VectorXd theta) {
  FlowState state;
  state.flows = bundle.susceptances().asDiagonal() * (bundle.incidence().transpose() * theta);
  state.theta = std::move(theta);
  return state;
}

}  // namespace

LaplacianBundle build_laplacian(const Network& network) { return LaplacianBundle(network); }

FlowState solve_flow(const LaplacianBundle& bundle, const Network& network, const InjectionVector& p) {
  require_balanced(network, p);
  return flows_from_angles(bundle, bundle.a() * p);
}

FlowState pseudo_inverse_flow(const LaplacianBundle& bundle, const Network& network,
                              const InjectionVector& p) {
  require_balanced(network, p);
  return flows_from_angles(bundle, bundle.pseudo_inverse() * p);
}

}  // namespace gridfactor
