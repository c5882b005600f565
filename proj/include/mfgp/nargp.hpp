#pragma once

#include "mfgp/covariance.hpp"
#include "mfgp/gp.hpp"
#include "mfgp/mf_data.hpp"

#include <cstdint>
#include <vector>

namespace mfgp {

/// k([x, f], [x', f']) = k_z(x, x') k_f(f, f') + k_g(x, x') over inputs with
/// d + 1 columns, the last being the propagated lower-fidelity output.
/// k_f has unit variance. Parameters:
/// [log var_z, log inv-ls_z (d), log inv-ls_f, log var_g, log inv-ls_g (d)].
class CompositeCovariance final : public Covariance {
 public:
  explicit CompositeCovariance(int x_dim, bool ard = true);

  int x_dim() const { return d_; }
  int input_dim() const override { return d_ + 1; }
  int num_params() const override;
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
  void param_bounds(double log_lower, double log_upper, VectorXd& lower,
                    VectorXd& upper) const override;
  void init_bounds(double log_lower, double log_upper, VectorXd& lower,
                   VectorXd& upper) const override;

  /// Index of log inv-ls_f in the parameter vector.
  int f_lengthscale_index() const { return 1 + nls_; }

 private:
  struct Parts;
  Parts split(const VectorXd& params) const;

  int d_;
  bool ard_;
  int nls_;
};

struct NARGPModel {
  /// Level 0 is a GP over x; level t >= 1 is a GP over [x, mean_{t-1}(x)].
  std::vector<TrainedGP> level_gps;
  bool nested = false;

  int num_levels() const { return static_cast<int>(level_gps.size()); }
  int num_hyperparameters() const;
};

/// With `nested` the data must be nested; otherwise the previous level's
/// posterior mean stands in at the new inputs.
NARGPModel nargp_fit(const MultiFidelityDataset& data, const OptimizerConfig& config,
                     bool nested);

/// Plug-in posterior mean of `level` (no sampling); used to build training
/// inputs of the next level.
VectorXd nargp_plugin_mean(const NARGPModel& model, const MatrixXd& X, int level);

struct NargpPredictOptions {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  /// Target level; -1 means the top level.
  int level = -1;
};

/// Per-query mixture components at the target level: column i holds the
/// predictive means and variances of the n_samples propagated paths of query i.
struct NargpComponents {
  MatrixXd means;
  MatrixXd variances;
};

NargpComponents nargp_components(const NARGPModel& model, const MatrixXd& X_query,
                                 const NargpPredictOptions& options = {});

/// Ancestral Monte-Carlo propagation through the levels. Returns the mixture
/// mean and the law-of-total-variance estimate per query point.
PosteriorPrediction nargp_predict(const NARGPModel& model, const MatrixXd& X_query,
                                  const NargpPredictOptions& options = {});

}  // namespace mfgp
