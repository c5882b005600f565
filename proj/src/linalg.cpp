#include "mfgp/linalg.hpp"

#include "mfgp/error.hpp"
#include "mfgp/kernels.hpp"

#include <cmath>
#include <sstream>

namespace mfgp {

double JitteredCholesky::log_det() const {
  const Eigen::MatrixXd& L = llt.matrixLLT();
  return 2.0 * L.diagonal().array().log().sum();
}

Eigen::MatrixXd JitteredCholesky::inverse() const {
  const auto n = llt.matrixLLT().rows();
  return llt.solve(Eigen::MatrixXd::Identity(n, n));
}

JitteredCholesky factor_with_jitter(const Eigen::MatrixXd& K, double scale,
                                    const Eigen::VectorXd& params) {
  return factor_with_jitter(K, Eigen::VectorXd::Constant(K.rows(), scale), params);
}

JitteredCholesky factor_with_jitter(const Eigen::MatrixXd& K, const Eigen::VectorXd& scales,
                                    const Eigen::VectorXd& params) {
  const double top = scales.size() > 0 ? scales.maxCoeff() : 1.0;
  if (!K.allFinite() || !scales.allFinite() || scales.size() != K.rows() ||
      (scales.size() > 0 && scales.minCoeff() <= 0.0)) {
    std::ostringstream msg;
    msg << "covariance matrix is not finite (scale " << top << ") at parameters ["
        << params.transpose() << "]";
    throw NumericalFailure(msg.str(), params);
  }
  constexpr double kMaxRelativeJitter = 1e-4;
  JitteredCholesky out;
  for (double rel = kRelativeJitter; rel <= kMaxRelativeJitter * (1 + 1e-9);
       rel *= 10.0) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal() += rel * scales;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success &&
        out.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.jitter = rel * top;
      out.relative_jitter = rel;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed after jitter escalation to "
      << kMaxRelativeJitter << " * " << top << " at parameters ["
      << params.transpose() << "]";
  throw NumericalFailure(msg.str(), params);
}

}  // namespace mfgp
