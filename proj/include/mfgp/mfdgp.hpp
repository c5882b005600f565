#pragma once

#include "mfgp/gp.hpp"
#include "mfgp/mf_data.hpp"
#include "mfgp/svgp.hpp"

#include <cstdint>
#include <vector>

namespace mfgp {

struct MfdgpConfig {
  int iterations = 5000;
  double learning_rate = 1e-2;
  /// Step size is multiplied by decay_factor at each of these fractions of
  /// the run.
  std::vector<double> decay_at = {0.6, 0.85};
  double decay_factor = 0.1;
  /// Monte-Carlo samples per iteration.
  int n_mc = 10;
  /// Points per level and iteration; 0 uses every point.
  int minibatch = 0;
  /// Cap on the inducing inputs per layer (evenly strided subset).
  int max_inducing = 100;
  /// Likelihood noise bounds in standardized units.
  double noise_floor = 1e-6;
  double noise_ceiling = 1.0;
  double init_noise = 1e-3;
  /// Initial variational covariance relative to the prior.
  double init_q_scale = 1e-4;
  double log_lower = -6.907755278982137;
  double log_upper = 6.907755278982137;
  std::uint64_t seed = 0;
};

/// Layer l models level l in standardized units. Layer 0 takes x; layer
/// l >= 1 takes [x, f_{l-1}] with a composite kernel and a zero mean.
struct MFDGPModel {
  std::vector<SvgpLayer> layers;
  InputScaler input_scaler;
  std::vector<OutputScaler> output_scalers;
  /// Training data in model units.
  std::vector<Dataset> train;
  /// Stochastic ELBO estimate at every iteration.
  std::vector<double> elbo_trace;

  int num_levels() const { return static_cast<int>(layers.size()); }
  int num_hyperparameters() const;
};

/// Builds the untrained model: scalers, inducing inputs and initial q.
MFDGPModel mfdgp_init(const MultiFidelityDataset& data, const MfdgpConfig& config);

/// Concatenated layer parameters (SvgpLayer::pack order, layer by layer).
VectorXd mfdgp_pack(const MFDGPModel& model);
void mfdgp_unpack(MFDGPModel& model, const VectorXd& packed);

/// Composite ELBO over every level of model.train. Intermediate layers are
/// sampled, the last layer of each level's chain is integrated in closed form.
/// `grad` uses the mfdgp_pack layout.
double mfdgp_elbo(const MFDGPModel& model, const ElboOptions& options,
                  VectorXd* grad = nullptr, int minibatch = 0);

/// Adam on the composite ELBO. Throws TrainingFailure when the ELBO becomes
/// non-finite.
MFDGPModel mfdgp_fit(const MultiFidelityDataset& data, const MfdgpConfig& config = {});

struct MfdgpPredictOptions {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  /// Target level; -1 means the top level.
  int level = -1;
};

/// Mixture mean and law-of-total-variance estimate of the latent target level
/// in raw units.
PosteriorPrediction mfdgp_predict(const MFDGPModel& model, const MatrixXd& X_query,
                                  const MfdgpPredictOptions& options = {});

/// Top-level likelihood noise variance in raw units.
double mfdgp_noise(const MFDGPModel& model, int level = -1);

}  // namespace mfgp
