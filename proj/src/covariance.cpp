#include "mfgp/covariance.hpp"

#include "mfgp/error.hpp"

#include <cmath>

namespace mfgp {

StationaryCovariance::StationaryCovariance(KernelSpec spec)
    : spec_(std::move(spec)) {
  MFGP_REQUIRE(spec_.input_dim >= 1, "kernel input_dim must be >= 1");
}

HyperParams StationaryCovariance::to_hyper_params(const VectorXd& params) const {
  HyperParams hp = HyperParams::defaults(spec_);
  unpack_kernel_params(spec_, params, hp);
  return hp;
}

MatrixXd StationaryCovariance::eval(const VectorXd& params, const MatrixXd& X,
                                    const MatrixXd& X2) const {
  return kernel_eval(spec_, to_hyper_params(params), X, X2);
}

VectorXd StationaryCovariance::diag(const VectorXd& params,
                                    const MatrixXd& X) const {
  return kernel_diag(spec_, to_hyper_params(params), X);
}

std::vector<MatrixXd> StationaryCovariance::grad_cross(const VectorXd& params,
                                                       const MatrixXd& X,
                                                       const MatrixXd& X2) const {
  return kernel_grad_cross(spec_, to_hyper_params(params), X, X2);
}

std::vector<VectorXd> StationaryCovariance::grad_diag(const VectorXd& params,
                                                      const MatrixXd& X) const {
  std::vector<VectorXd> out(num_params(), VectorXd::Zero(X.rows()));
  out[0] = VectorXd::Constant(X.rows(), std::exp(params(0)));
  return out;
}

MatrixXd StationaryCovariance::input_grad(const VectorXd& params,
                                          const MatrixXd& X, const MatrixXd& X2,
                                          int column) const {
  return kernel_input_grad(spec_, to_hyper_params(params), X, X2, column);
}

double StationaryCovariance::prior_variance(const VectorXd& params) const {
  return std::exp(params(0));
}

VectorXd StationaryCovariance::prior_variance_grad(const VectorXd& params) const {
  VectorXd g = VectorXd::Zero(num_params());
  g(0) = std::exp(params(0));
  return g;
}

VectorXd StationaryCovariance::default_params() const {
  HyperParams hp = HyperParams::defaults(spec_);
  // Unit variance, lengthscale ~0.3 on unit-box inputs.
  hp.log_inv_lengthscales.setConstant(std::log(5.0));
  return pack_kernel_params(spec_, hp);
}

void StationaryCovariance::param_bounds(double log_lower, double log_upper,
                                        VectorXd& lower, VectorXd& upper) const {
  init_bounds(log_lower, log_upper, lower, upper);
  lower(0) = log_lower + std::log(1e-5);
}

void StationaryCovariance::init_bounds(double log_lower, double log_upper,
                                       VectorXd& lower, VectorXd& upper) const {
  lower = VectorXd::Constant(num_params(), log_lower);
  upper = VectorXd::Constant(num_params(), log_upper);
  if (spec_.exponents_free()) {
    const int first = 1 + spec_.num_lengthscales();
    lower.segment(first, spec_.input_dim).setConstant(0.1);
    upper.segment(first, spec_.input_dim).setConstant(2.0);
  }
}

CovariancePtr make_stationary(const KernelSpec& spec) {
  return std::make_shared<StationaryCovariance>(spec);
}

}  // namespace mfgp
