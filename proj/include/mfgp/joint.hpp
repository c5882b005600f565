#pragma once

#include "mfgp/gp.hpp"
#include "mfgp/mf_data.hpp"

#include <memory>
#include <vector>

namespace mfgp {

/// Covariance between (input, fidelity level) pairs. Used by the co-kriging
/// models that condition every level jointly.
class LevelCovariance {
 public:
  virtual ~LevelCovariance() = default;

  virtual int input_dim() const = 0;
  virtual int num_levels() const = 0;
  virtual int num_params() const = 0;

  virtual MatrixXd eval(const VectorXd& params, const MatrixXd& X,
                        const Eigen::VectorXi& lx, const MatrixXd& X2,
                        const Eigen::VectorXi& l2) const = 0;
  virtual VectorXd diag(const VectorXd& params, const MatrixXd& X,
                        const Eigen::VectorXi& lx) const = 0;
  /// dK(X, X)/d params_j for every j.
  virtual std::vector<MatrixXd> grad(const VectorXd& params, const MatrixXd& X,
                                     const Eigen::VectorXi& lx) const = 0;

  /// Per-row scale of the factorization jitter. Default: the mean prior
  /// variance of each row's level.
  virtual VectorXd jitter_scales(const VectorXd& params, const MatrixXd& X,
                                 const Eigen::VectorXi& lx) const;
  /// d jitter_scales / d params_j as an n x num_params matrix; `dK` is grad().
  virtual MatrixXd jitter_scales_grad(const VectorXd& params, const MatrixXd& X,
                                      const Eigen::VectorXi& lx,
                                      const std::vector<MatrixXd>& dK) const;

  virtual VectorXd default_params() const = 0;
  virtual void param_bounds(const OptimizerConfig& config, VectorXd& lower,
                            VectorXd& upper) const = 0;
  virtual void init_bounds(const OptimizerConfig& config, VectorXd& lower,
                           VectorXd& upper) const = 0;
};

using LevelCovariancePtr = std::shared_ptr<const LevelCovariance>;

/// Covariance parameters plus one nugget and one constant mean per level.
struct JointParams {
  VectorXd cov;
  VectorXd log_noise;
  VectorXd mean;
};

/// NLML of the stacked observations; `grad` (optional) mirrors `params`.
double joint_nlml(const LevelCovariance& cov, const JointParams& params,
                  const MatrixXd& X, const Eigen::VectorXi& levels,
                  const VectorXd& y, JointParams* grad = nullptr);

struct JointModel {
  LevelCovariancePtr covariance;
  JointParams params;
  MatrixXd X_train;  // scaled
  Eigen::VectorXi levels;
  VectorXd y_train;  // scaled per level
  MatrixXd cholesky_factor;
  VectorXd alpha;
  /// Diagonal jitter added to each stacked row.
  VectorXd jitter;
  double nlml_value = 0.0;
  InputScaler input_scaler;
  std::vector<OutputScaler> output_scalers;
  std::vector<double> trace;
  std::vector<std::string> diagnostics;

  int num_hyperparameters() const {
    return static_cast<int>(params.cov.size() + params.log_noise.size() +
                            params.mean.size());
  }
};

/// Conditions on `data` with fixed parameters; no scaling is applied.
JointModel condition_joint(LevelCovariancePtr cov, const JointParams& params,
                           const MultiFidelityDataset& data);

/// Multi-start BFGS on the joint NLML. With config.standardize the inputs of
/// all levels share one unit-box map and each level gets its own z-score.
JointModel fit_joint(LevelCovariancePtr cov, const MultiFidelityDataset& data,
                     const OptimizerConfig& config);

PosteriorPrediction predict_joint(const JointModel& model, const MatrixXd& X_query,
                                  int level, bool full_covariance = false);

}  // namespace mfgp
