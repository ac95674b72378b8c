#pragma once

#include <Eigen/Dense>

namespace jacopt {

/// Strictly convex QP
///
///     minimize  0.5 z'Gz + c'z   subject to  lo <= A z <= hi
///
/// with G symmetric positive definite. Infinite entries of lo/hi are
/// absent bounds; lo == hi is an equality.
struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

enum class QpStatus { Optimal, Infeasible, NotConvex, IterationLimit };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd z;
  /// One multiplier per row of A with Gz + c = A' lambda; positive when the
  /// lower bound is active, negative for the upper bound.
  Eigen::VectorXd lambda;
  double objective = 0.0;
  int iterations = 0;
};

/// Goldfarb-Idnani dual active-set method.
QpResult solve_qp(const QpProblem& qp);

}  // namespace jacopt
