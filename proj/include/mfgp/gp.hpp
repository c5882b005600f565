#pragma once

#include "mfgp/covariance.hpp"
#include "mfgp/kernels.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfgp {

struct Dataset {
  MatrixXd X;
  VectorXd y;

  Eigen::Index size() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }
};

void validate(const Dataset& data);

/// x' = (x - offset) / scale, per column.
struct InputScaler {
  VectorXd offset;
  VectorXd scale;

  static InputScaler identity(int d);
  /// Maps the bounding box of X onto [0, 1]^d.
  static InputScaler unit_box(const MatrixXd& X);
  MatrixXd apply(const MatrixXd& X) const;
  MatrixXd invert(const MatrixXd& Xs) const;
};

/// y' = (y - mean) / scale.
struct OutputScaler {
  double mean = 0.0;
  double scale = 1.0;

  static OutputScaler standardize(const VectorXd& y);
  VectorXd apply(const VectorXd& y) const {
    return (y.array() - mean) / scale;
  }
  VectorXd invert_mean(const VectorXd& ys) const {
    return (ys.array() * scale + mean).matrix();
  }
  VectorXd invert_variance(const VectorXd& vs) const {
    return vs * (scale * scale);
  }
};

struct OptimizerConfig {
  int restarts = 10;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Fit on unit-box inputs and z-scored outputs; undone at prediction.
  bool standardize = true;
  double log_lower = -6.907755278982137;  // log 1e-3
  double log_upper = 6.907755278982137;   // log 1e3
  /// Upper bound on the nugget, relative to the output variance.
  double max_relative_noise = 1.0;
  /// Bound on regression coefficients (the AR1 scale factor rho).
  double coef_bound = 5.0;
};

struct PosteriorPrediction {
  VectorXd mean;
  VectorXd variance;
  std::optional<MatrixXd> covariance;
  /// Largest negative variance that was clamped to zero.
  double max_clamped = 0.0;
};

/// Free parameters of an exact GP with mean m(x) = mean + h(x)^T coefs.
struct GpParams {
  VectorXd kernel;
  double log_noise = -13.815510557964274;  // log 1e-6
  double mean = 0.0;
  VectorXd coefs;

  double noise() const;
};

struct TrainedGP {
  CovariancePtr covariance;
  GpParams params;
  MatrixXd X_train;  // scaled inputs
  MatrixXd H_train;  // regressors, M x q (q may be 0)
  VectorXd y_train;  // scaled outputs
  MatrixXd cholesky_factor;  // lower factor of K + noise I + jitter I
  VectorXd alpha;            // (K + noise I)^-1 (y - mean - H coefs)
  double jitter = 0.0;
  double nlml_value = 0.0;
  InputScaler input_scaler;
  OutputScaler output_scaler;
  /// Objective at each accepted iterate of the winning restart.
  std::vector<double> trace;
  std::vector<std::string> diagnostics;

  /// Only valid for StationaryCovariance models.
  const KernelSpec& spec() const;
  HyperParams hp() const;
  double prior_variance() const { return covariance->prior_variance(params.kernel); }
  int num_hyperparameters() const;
};

/// Negative log marginal likelihood of the stationary GP (no scaling).
double nlml(const KernelSpec& spec, const HyperParams& hp, const Dataset& data);

/// Gradient of nlml over [kernel params (kernel_grad order), log_noise, mean_const].
VectorXd nlml_grad(const KernelSpec& spec, const HyperParams& hp,
                   const Dataset& data);

/// NLML of a general exact GP. When `grad` is non-null it receives the
/// gradient laid out like `params`.
double exact_nlml(const Covariance& cov, const GpParams& params, const MatrixXd& X,
                  const VectorXd& y, const MatrixXd& H, GpParams* grad = nullptr);

/// Builds the posterior for fixed parameters; no optimization, no scaling.
TrainedGP condition_gp(CovariancePtr cov, const GpParams& params, const MatrixXd& X,
                       const VectorXd& y, const MatrixXd& H = MatrixXd());

struct GpFitProblem {
  CovariancePtr covariance;
  MatrixXd X;
  VectorXd y;
  MatrixXd H;  // optional regressors (rows = X rows)
  /// When set, the regression coefficients are held at this value.
  std::optional<VectorXd> fixed_coefs;
};

/// Multi-start BFGS on the NLML of an already-scaled problem.
TrainedGP fit_exact_gp(const GpFitProblem& problem, const OptimizerConfig& config);

/// Stationary GP fit; standardizes when config.standardize is set.
TrainedGP fit_gp(const KernelSpec& spec, const Dataset& data,
                 const OptimizerConfig& config);

/// Posterior of the latent function at X_query (raw units). `H_query` supplies
/// regressors for models that have them.
PosteriorPrediction predict_gp(const TrainedGP& model, const MatrixXd& X_query,
                               bool full_covariance = false);
PosteriorPrediction predict_gp(const TrainedGP& model, const MatrixXd& X_query,
                               const MatrixXd& H_query, bool full_covariance = false);

/// GpParams <-> HyperParams for stationary kernels.
GpParams to_gp_params(const KernelSpec& spec, const HyperParams& hp);
HyperParams to_hyper_params(const KernelSpec& spec, const GpParams& params);

}  // namespace mfgp
