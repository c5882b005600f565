#pragma once

#include "mfgp/kernels.hpp"

#include <memory>
#include <vector>

namespace mfgp {

/// Type-erased covariance function over a flat parameter vector. The exact GP
/// machinery, the NARGP composite kernel and the variational layers all talk
/// to kernels through this interface.
class Covariance {
 public:
  virtual ~Covariance() = default;

  virtual int input_dim() const = 0;
  virtual int num_params() const = 0;

  virtual MatrixXd eval(const VectorXd& params, const MatrixXd& X,
                        const MatrixXd& X2) const = 0;
  virtual VectorXd diag(const VectorXd& params, const MatrixXd& X) const = 0;

  /// dK(X, X2)/d params_j for every j.
  virtual std::vector<MatrixXd> grad_cross(const VectorXd& params,
                                           const MatrixXd& X,
                                           const MatrixXd& X2) const = 0;
  /// d diag(K(X, X))/d params_j for every j.
  virtual std::vector<VectorXd> grad_diag(const VectorXd& params,
                                          const MatrixXd& X) const = 0;
  /// Entry (i, j) is dK(X_i, X2_j)/dX(i, column).
  virtual MatrixXd input_grad(const VectorXd& params, const MatrixXd& X,
                              const MatrixXd& X2, int column) const = 0;

  /// Prior variance k(x, x); sets the scale of the factorization jitter.
  virtual double prior_variance(const VectorXd& params) const = 0;
  virtual VectorXd prior_variance_grad(const VectorXd& params) const = 0;

  /// Starting point used by the first optimizer restart.
  virtual VectorXd default_params() const = 0;
  /// Box for each parameter given the bounds used for log-scale parameters.
  virtual void param_bounds(double log_lower, double log_upper, VectorXd& lower,
                            VectorXd& upper) const = 0;
  /// Box the random restarts are drawn from; defaults to param_bounds.
  virtual void init_bounds(double log_lower, double log_upper, VectorXd& lower,
                           VectorXd& upper) const {
    param_bounds(log_lower, log_upper, lower, upper);
  }

  std::vector<MatrixXd> grad(const VectorXd& params, const MatrixXd& X) const {
    return grad_cross(params, X, X);
  }
};

using CovariancePtr = std::shared_ptr<const Covariance>;

/// p-exponential / squared-exponential kernel from kernels.hpp.
class StationaryCovariance final : public Covariance {
 public:
  explicit StationaryCovariance(KernelSpec spec);

  const KernelSpec& spec() const { return spec_; }
  HyperParams to_hyper_params(const VectorXd& params) const;

  int input_dim() const override { return spec_.input_dim; }
  int num_params() const override { return spec_.num_kernel_params(); }
  MatrixXd eval(const VectorXd& params, const MatrixXd& X,
                const MatrixXd& X2) const override;
  VectorXd diag(const VectorXd& params, const MatrixXd& X) const override;
  std::vector<MatrixXd> grad_cross(const VectorXd& params, const MatrixXd& X,
                                   const MatrixXd& X2) const override;
  std::vector<VectorXd> grad_diag(const VectorXd& params,
                                  const MatrixXd& X) const override;
  MatrixXd input_grad(const VectorXd& params, const MatrixXd& X,
                      const MatrixXd& X2, int column) const override;
  double prior_variance(const VectorXd& params) const override;
  VectorXd prior_variance_grad(const VectorXd& params) const override;
  VectorXd default_params() const override;
  /// The variance may shrink five decades below log_lower so that a vanishing
  /// discrepancy can be represented.
  void param_bounds(double log_lower, double log_upper, VectorXd& lower,
                    VectorXd& upper) const override;
  void init_bounds(double log_lower, double log_upper, VectorXd& lower,
                   VectorXd& upper) const override;

 private:
  KernelSpec spec_;
};

CovariancePtr make_stationary(const KernelSpec& spec);

}  // namespace mfgp
