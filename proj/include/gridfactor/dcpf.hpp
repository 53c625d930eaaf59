#pragma once

#include <Eigen/Dense>

#include "gridfactor/network.hpp"

namespace gridfactor {

/// Laplacian L = C B C^T together with the padded inverse A of the reduced
/// Laplacian (reference row and column removed, then re-inserted as zeros).
class LaplacianBundle {
 public:
  /// Throws SingularError when the reduced Laplacian has a pivot below
  /// 1e-12 * max|reduced L| (the graph is disconnected).
  explicit LaplacianBundle(const Network& network);

  [[nodiscard]] const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
  [[nodiscard]] const Eigen::MatrixXd& reduced_laplacian() const noexcept { return reduced_; }
  [[nodiscard]] const Eigen::MatrixXd& a() const noexcept { return a_; }
  [[nodiscard]] double reduced_determinant() const noexcept { return determinant_; }
  [[nodiscard]] NodeIndex reference() const noexcept { return reference_; }
  [[nodiscard]] const IncidenceMatrix& incidence() const noexcept { return incidence_; }
  [[nodiscard]] const Eigen::VectorXd& susceptances() const noexcept { return susceptances_; }

  /// L^+ = (L + 11^T/n)^{-1} - 11^T/n, computed on each call.
  [[nodiscard]] Eigen::MatrixXd pseudo_inverse() const;

 private:
  Eigen::MatrixXd laplacian_;
  Eigen::MatrixXd reduced_;
  Eigen::MatrixXd a_;
  IncidenceMatrix incidence_;
  Eigen::VectorXd susceptances_;
  double determinant_ = 0.0;
  NodeIndex reference_ = 0;
};

struct FlowState {
  Eigen::VectorXd theta;  // per node, radians
  Eigen::VectorXd flows;  // per edge, signed by orientation
};

/// theta = A p (reference angle zero), f = B C^T theta.
[[nodiscard]] LaplacianBundle build_laplacian(const Network& network);

[[nodiscard]] FlowState solve_flow(const LaplacianBundle& bundle, const Network& network,
                                   const InjectionVector& p);

/// theta = L^+ p, f = B C^T theta. Same flows as solve_flow; angles differ by
/// the constant reference angle.
[[nodiscard]] FlowState pseudo_inverse_flow(const LaplacianBundle& bundle, const Network& network,
                                            const InjectionVector& p);

/// Removes row and column `skip` from a square matrix.
[[nodiscard]] Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& m, Eigen::Index skip_row,
                                           Eigen::Index skip_col);

}  // namespace gridfactor
