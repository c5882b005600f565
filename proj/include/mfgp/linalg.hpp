#pragma once

#include <Eigen/Dense>

namespace mfgp {

/// Cholesky factor of K + jitter * I.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  /// Absolute jitter that was added to the diagonal.
  double jitter = 0.0;
  /// jitter / scale; the derivative of the jitter w.r.t. the scale.
  double relative_jitter = 0.0;

  Eigen::MatrixXd lower() const { return llt.matrixL(); }
  double log_det() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
  Eigen::MatrixXd inverse() const;
};

/// Factorizes K + jitter*I with jitter starting at kRelativeJitter * scale and
/// growing tenfold up to 1e-4 * scale. Throws NumericalFailure carrying
/// `params` when every attempt fails.
JitteredCholesky factor_with_jitter(const Eigen::MatrixXd& K, double scale,
                                    const Eigen::VectorXd& params);
/// Same, with a separate scale per row: jitter_i = rel * scales_i. `jitter`
/// then holds rel * max(scales).
JitteredCholesky factor_with_jitter(const Eigen::MatrixXd& K, const Eigen::VectorXd& scales,
                                    const Eigen::VectorXd& params);

}  // namespace mfgp
