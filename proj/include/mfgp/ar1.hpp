#pragma once

#include "mfgp/joint.hpp"

#include <memory>
#include <vector>

namespace mfgp {

/// Recursive autoregressive fusion f_t = rho_{t-1} f_{t-1} + gamma_t.
///
/// Level t >= 1 is an exact GP with one regressor, the standardized
/// posterior mean of level t-1, whose coefficient is rho (in standardized
/// units). Each level keeps its own input and output scaling.
struct AR1Model {
  std::vector<TrainedGP> level_gps;

  int num_levels() const { return static_cast<int>(level_gps.size()); }
  /// rho_{t-1} for t = 1..s-1 in raw output units.
  VectorXd rhos() const;
  int num_hyperparameters() const;
};

/// Requires nested data. With `fix_rho_zero` the scale factor is held at 0.
AR1Model ar1_fit_recursive(const MultiFidelityDataset& data,
                           const OptimizerConfig& config, bool fix_rho_zero = false);

/// Recursive model with explicit per-level parameters and no scaling. For
/// levels t >= 1, params[t].coefs holds the single entry rho_{t-1}.
AR1Model ar1_condition_recursive(const MultiFidelityDataset& data,
                                 const KernelSpec& spec,
                                 const std::vector<GpParams>& params);

/// Prediction at `level` (default: top level).
PosteriorPrediction ar1_predict(const AR1Model& model, const MatrixXd& X_query,
                                int level = -1);

/// Joint covariance of (f_1, f_2 = rho f_1 + gamma_2): k1 on LF-LF,
/// rho k1 on LF-HF, rho^2 k1 + k2 on HF-HF. Parameters are
/// [k1 kernel params, k2 kernel params, rho].
class CoupledAr1Covariance final : public LevelCovariance {
 public:
  explicit CoupledAr1Covariance(KernelSpec spec);

  int input_dim() const override { return spec_.input_dim; }
  int num_levels() const override { return 2; }
  int num_params() const override { return 2 * spec_.num_kernel_params() + 1; }
  MatrixXd eval(const VectorXd& params, const MatrixXd& X, const Eigen::VectorXi& lx,
                const MatrixXd& X2, const Eigen::VectorXi& l2) const override;
  VectorXd diag(const VectorXd& params, const MatrixXd& X,
                const Eigen::VectorXi& lx) const override;
  std::vector<MatrixXd> grad(const VectorXd& params, const MatrixXd& X,
                             const Eigen::VectorXi& lx) const override;
  /// LF rows use the LF variance and HF rows the discrepancy variance, as in
  /// the recursive model.
  VectorXd jitter_scales(const VectorXd& params, const MatrixXd& X,
                         const Eigen::VectorXi& lx) const override;
  MatrixXd jitter_scales_grad(const VectorXd& params, const MatrixXd& X,
                              const Eigen::VectorXi& lx,
                              const std::vector<MatrixXd>& dK) const override;
  VectorXd default_params() const override;
  void param_bounds(const OptimizerConfig& config, VectorXd& lower,
                    VectorXd& upper) const override;
  void init_bounds(const OptimizerConfig& config, VectorXd& lower,
                   VectorXd& upper) const override;

  const KernelSpec& spec() const { return spec_; }
  double rho(const VectorXd& params) const { return params(params.size() - 1); }

 private:
  KernelSpec spec_;
};

struct CoupledAR1Model {
  JointModel joint;
  std::shared_ptr<const CoupledAr1Covariance> coupled;

  /// rho in raw output units.
  double rho() const;
  int num_hyperparameters() const { return joint.num_hyperparameters(); }
};

/// Two-level Kennedy-O'Hagan model trained on the joint NLML. Nesting is not
/// required.
CoupledAR1Model ar1_fit_coupled(const MultiFidelityDataset& data,
                                const OptimizerConfig& config);

/// Coupled model sharing the hyperparameters of a recursive parameterization
/// (lf: level-1 GP, discrepancy: level-2 GP with coefs = [rho]); no scaling.
CoupledAR1Model ar1_condition_coupled(const MultiFidelityDataset& data,
                                      const KernelSpec& spec, const GpParams& lf,
                                      const GpParams& discrepancy);

PosteriorPrediction ar1_predict_coupled(const CoupledAR1Model& model,
                                        const MatrixXd& X_query, int level = 1);

}  // namespace mfgp
