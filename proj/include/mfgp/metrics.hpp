#pragma once

#include <Eigen/Dense>

namespace mfgp {

/// 1 - sum (y - y_hat)^2 / sum (y - mean y)^2. Throws UndefinedMetric when y
/// is constant.
double metric_r2(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred);

double metric_rmse(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred);

/// Mean Gaussian negative log predictive density,
/// (1/n) sum [0.5 log(2 pi s^2) + (y - m)^2 / (2 s^2)].
double metric_mnll(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred_mean,
                   const Eigen::VectorXd& y_pred_std);

}  // namespace mfgp
