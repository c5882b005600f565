#include "mfgp/metrics.hpp"

#include "mfgp/error.hpp"

#include <cmath>

namespace mfgp {

double metric_r2(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred) {
  MFGP_REQUIRE(y_test.size() == y_pred.size() && y_test.size() >= 2,
               "r2 needs two equal-length vectors of size >= 2");
  const double sst = (y_test.array() - y_test.mean()).square().sum();
  if (!(sst > 0.0)) throw UndefinedMetric("r2 is undefined for a constant test set");
  return 1.0 - (y_test - y_pred).squaredNorm() / sst;
}

double metric_rmse(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred) {
  MFGP_REQUIRE(y_test.size() == y_pred.size() && y_test.size() >= 1,
               "rmse needs two equal-length non-empty vectors");
  return std::sqrt((y_test - y_pred).squaredNorm() / static_cast<double>(y_test.size()));
}

double metric_mnll(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_pred_mean,
                   const Eigen::VectorXd& y_pred_std) {
  MFGP_REQUIRE(y_test.size() == y_pred_mean.size() && y_test.size() == y_pred_std.size() &&
                   y_test.size() >= 1,
               "mnll needs three equal-length non-empty vectors");
  MFGP_REQUIRE((y_pred_std.array() > 0.0).all(), "predictive std must be positive");
  constexpr double kLog2Pi = 1.8378770664093453;
  const Eigen::ArrayXd var = y_pred_std.array().square();
  const Eigen::ArrayXd r2 = (y_test - y_pred_mean).array().square();
  return (0.5 * (kLog2Pi + var.log()) + r2 / (2.0 * var)).mean();
}

}  // namespace mfgp
