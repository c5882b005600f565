#pragma once

#include "mfgp/covariance.hpp"
#include "mfgp/gp.hpp"
#include "mfgp/linalg.hpp"

#include <cstdint>

namespace mfgp {

/// Sparse variational GP layer in the whitened parameterization:
/// u = L_zz v with q(v) = N(m, S), S = L_q L_q^T. The diagonal of L_q is
/// stored as a softplus pre-image so that S stays positive definite.
struct SvgpLayer {
  CovariancePtr covariance;
  VectorXd kernel;
  double log_noise = -6.907755278982137;  // log 1e-3
  double mean = 0.0;
  MatrixXd Z;
  VectorXd q_mean;
  /// Lower triangular; the diagonal holds softplus^-1 of L_q(i, i).
  MatrixXd q_sqrt_raw;

  /// Prior-like start: m = 0, S = scale * I.
  static SvgpLayer make(CovariancePtr covariance, VectorXd kernel, MatrixXd Z,
                        double q_scale = 1e-4);

  int num_inducing() const { return static_cast<int>(Z.rows()); }
  MatrixXd q_sqrt() const;
  void set_q_sqrt(const MatrixXd& L);
  double noise() const { return std::exp(log_noise); }

  /// [kernel, log_noise, mean, q_mean, lower triangle of q_sqrt_raw by column].
  int num_params() const;
  VectorXd pack() const;
  void unpack(const VectorXd& packed);
};

double softplus(double x);
double softplus_inverse(double y);

/// Per-parameter-vector quantities shared by every marginal evaluation.
struct SvgpFactors {
  JitteredCholesky kzz;
  MatrixXd Lk;
  MatrixXd Lq;
};

SvgpFactors svgp_factors(const SvgpLayer& layer);

/// q(f_n) = N(mean_n, variance_n) at each row of `inputs`.
struct SvgpMarginals {
  MatrixXd inputs;
  MatrixXd A;  // L_zz^-1 K_zx
  VectorXd mean;
  VectorXd variance;
};

SvgpMarginals svgp_marginals(const SvgpLayer& layer, const SvgpFactors& factors,
                             const MatrixXd& inputs);

/// Gradient accumulator for one layer. Call svgp_backward for every batch of
/// marginals, then svgp_finish to fold the inducing-point terms (and the KL
/// when requested) into `grad`, which uses the pack() layout.
struct SvgpGradient {
  VectorXd kernel;
  double log_noise = 0.0;
  double mean = 0.0;
  VectorXd q_mean;
  MatrixXd S;
  MatrixXd Lk;

  explicit SvgpGradient(const SvgpLayer& layer);
};

/// Pulls d objective / d marginal mean and variance back to the layer. When
/// `input_bar` is non-null it receives d objective / d inputs(:, input_column).
void svgp_backward(const SvgpLayer& layer, const SvgpFactors& factors,
                   const SvgpMarginals& marginals, const VectorXd& mean_bar,
                   const VectorXd& variance_bar, SvgpGradient& acc,
                   int input_column = -1, VectorXd* input_bar = nullptr);

/// KL(q(v) || N(0, I)).
double svgp_kl(const SvgpLayer& layer, const SvgpFactors& factors);

/// Adds -KL to the accumulator when `with_kl` and returns the packed gradient.
VectorXd svgp_finish(const SvgpLayer& layer, const SvgpFactors& factors,
                     const SvgpGradient& acc, bool with_kl);

/// E_q[log N(y | f, noise)] per point; writes d/d mean, d/d variance and
/// d/d log_noise when the pointers are non-null.
VectorXd expected_log_lik(const VectorXd& y, const VectorXd& mean,
                          const VectorXd& variance, double log_noise,
                          VectorXd* mean_bar = nullptr,
                          VectorXd* variance_bar = nullptr,
                          double* log_noise_bar = nullptr);

struct ElboOptions {
  int n_mc = 10;
  /// Closed-form Gaussian expectation instead of sampling.
  bool analytic = false;
  std::uint64_t seed = 0;
};

/// Single-layer evidence lower bound on a batch; `grad` uses the pack() layout.
double svgp_elbo(const SvgpLayer& layer, const Dataset& batch,
                 const ElboOptions& options = {}, VectorXd* grad = nullptr);

/// Latent marginals q(f) at X_query (layer units).
PosteriorPrediction svgp_predict(const SvgpLayer& layer, const MatrixXd& X_query);

/// Replaces q(v) by the optimum for a Gaussian likelihood on `data`.
void titsias_optimal(SvgpLayer& layer, const Dataset& data);

}  // namespace mfgp
