#pragma once

#include "mfgp/joint.hpp"

#include <vector>

namespace mfgp {

struct LmcConfig {
  /// Number of latent kernel groups R.
  int num_groups = 2;
  /// Rank C_r of each coregionalization matrix; size R.
  std::vector<int> ranks{1, 1};
  bool ard = true;
};

/// K((x, i), (x', j)) = sum_r B_r[i, j] k_r(x, x'), with B_r = A_r A_r^T and
/// each k_r a unit-variance squared-exponential kernel. Parameters per group:
/// the entries of A_r (s x C_r, row-major) then the log inverse lengthscales.
class LmcCovariance final : public LevelCovariance {
 public:
  LmcCovariance(int input_dim, int num_levels, LmcConfig config);

  int input_dim() const override { return d_; }
  int num_levels() const override { return s_; }
  int num_params() const override;
  MatrixXd eval(const VectorXd& params, const MatrixXd& X, const Eigen::VectorXi& lx,
                const MatrixXd& X2, const Eigen::VectorXi& l2) const override;
  VectorXd diag(const VectorXd& params, const MatrixXd& X,
                const Eigen::VectorXi& lx) const override;
  std::vector<MatrixXd> grad(const VectorXd& params, const MatrixXd& X,
                             const Eigen::VectorXi& lx) const override;
  VectorXd default_params() const override;
  void param_bounds(const OptimizerConfig& config, VectorXd& lower,
                    VectorXd& upper) const override;
  void init_bounds(const OptimizerConfig& config, VectorXd& lower,
                   VectorXd& upper) const override;

  const LmcConfig& config() const { return config_; }
  /// A_r from a flat parameter vector.
  MatrixXd mixing(const VectorXd& params, int group) const;
  MatrixXd coregionalization(const VectorXd& params, int group) const;
  VectorXd log_inv_lengthscales(const VectorXd& params, int group) const;
  /// Packs explicit A_r and lengthscales into the flat layout.
  VectorXd pack(const std::vector<MatrixXd>& mixing,
                const std::vector<VectorXd>& log_inv_lengthscales) const;

 private:
  int offset(int group) const;
  int group_size(int group) const;
  KernelSpec spec() const;

  int d_;
  int s_;
  LmcConfig config_;
};

struct LmcModel {
  JointModel joint;
  std::shared_ptr<const LmcCovariance> lmc;

  /// B_r in the model's standardized output units.
  MatrixXd coregionalization(int group) const {
    return lmc->coregionalization(joint.params.cov, group);
  }
  /// Correlation between two levels implied by sum_r B_r.
  double correlation(int a, int b) const;
  int num_hyperparameters() const { return joint.num_hyperparameters(); }
};

LmcModel lmc_fit(const MultiFidelityDataset& data, const LmcConfig& lmc_config,
                 const OptimizerConfig& config);

/// Conditions with explicit parameters and no scaling.
LmcModel lmc_condition(const MultiFidelityDataset& data, const LmcConfig& lmc_config,
                       const JointParams& params);

/// Posterior at `target_level` (0 = lowest fidelity) given every level.
PosteriorPrediction lmc_predict(const LmcModel& model, const MatrixXd& X_query,
                                int target_level, bool full_covariance = false);

}  // namespace mfgp
