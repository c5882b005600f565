#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mfgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelFamily {
  PExponential,
  SquaredExponential,
};

/// Shape of a stationary p-exponential covariance.
///
/// The squared-exponential family is the p-exponential family with every
/// exponent pinned to 2; `exponents` in HyperParams are ignored for it.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  int input_dim = 1;
  bool ard = true;
  /// Only meaningful for PExponential. Off by default: the exponent gradient
  /// is not smooth at zero distance.
  bool optimize_exponents = false;

  static KernelSpec squared_exponential(int input_dim, bool ard = true);
  static KernelSpec p_exponential(int input_dim, bool ard = true,
                                  bool optimize_exponents = false);

  int num_lengthscales() const { return ard ? input_dim : 1; }
  bool exponents_free() const {
    return family == KernelFamily::PExponential && optimize_exponents;
  }
  /// variance + inverse lengthscales (+ exponents when free); noise excluded.
  int num_kernel_params() const;
};

/// Hyperparameters of one stationary GP. Positive quantities are stored as
/// logarithms so they can be optimized unconstrained.
///
/// `log_inv_lengthscales` multiplies |dx|^p inside the exponential, i.e.
/// k = var * exp(-sum_i exp(log_inv_lengthscales_i) |dx_i|^p_i).
struct HyperParams {
  double log_variance = 0.0;
  VectorXd log_inv_lengthscales;
  VectorXd exponents;
  double log_noise = 0.0;
  double mean_const = 0.0;

  static HyperParams defaults(const KernelSpec& spec);

  double variance() const;
  double noise() const;
  double inv_lengthscale(int dim) const;
};

/// Lower bound on the nugget variance.
inline constexpr double kNoiseFloor = 1e-10;
/// Diagonal jitter relative to the signal variance, added before factorization.
inline constexpr double kRelativeJitter = 1e-10;

void validate(const KernelSpec& spec, const HyperParams& hp);

/// Covariance matrix K(X, X2); rows are points.
MatrixXd kernel_eval(const KernelSpec& spec, const HyperParams& hp,
                     const MatrixXd& X, const MatrixXd& X2);

VectorXd kernel_diag(const KernelSpec& spec, const HyperParams& hp,
                     const MatrixXd& X);

/// dK(X,X)/d(free parameter), in the log parameterization. Ordered as
/// [log_variance, log_inv_lengthscales..., (exponents...), log_noise]; the
/// final entry is noise * I.
std::vector<MatrixXd> kernel_grad(const KernelSpec& spec, const HyperParams& hp,
                                  const MatrixXd& X);

/// Same ordering as kernel_grad but for a cross covariance and without the
/// noise entry.
std::vector<MatrixXd> kernel_grad_cross(const KernelSpec& spec,
                                        const HyperParams& hp,
                                        const MatrixXd& X, const MatrixXd& X2);

/// Entry (i, j) is dK(X_i, X2_j) / dX(i, column).
MatrixXd kernel_input_grad(const KernelSpec& spec, const HyperParams& hp,
                           const MatrixXd& X, const MatrixXd& X2, int column);

/// Kernel parameters (no noise, no mean) flattened in kernel_grad order.
VectorXd pack_kernel_params(const KernelSpec& spec, const HyperParams& hp);
void unpack_kernel_params(const KernelSpec& spec, const VectorXd& packed,
                          HyperParams& hp);

}  // namespace mfgp
