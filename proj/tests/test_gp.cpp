#include "mfgp/error.hpp"
#include "mfgp/gp.hpp"
#include "mfgp/linalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace mfgp {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;

HyperParams random_hp(std::mt19937_64& rng, const KernelSpec& spec) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_variance = u(rng);
  for (Eigen::Index k = 0; k < hp.log_inv_lengthscales.size(); ++k) {
    hp.log_inv_lengthscales(k) = u(rng);
  }
  hp.log_noise = std::log(1e-2) + u(rng);
  hp.mean_const = u(rng);
  return hp;
}

Dataset random_data(std::mt19937_64& rng, int m, int d) {
  Dataset data;
  data.X = oracle::uniform_matrix(rng, m, d);
  data.y = oracle::uniform_matrix(rng, m, 1, -2.0, 2.0).col(0);
  return data;
}

MatrixXd khat(const KernelSpec& spec, const HyperParams& hp, const MatrixXd& X) {
  VectorXd theta(hp.log_inv_lengthscales.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    theta(k) = std::exp(hp.log_inv_lengthscales(k));
  }
  if (!spec.ard) {
    theta = VectorXd::Constant(spec.input_dim, theta(0));
  }
  MatrixXd K = oracle::pexp_kernel(hp.variance(), theta,
                                   VectorXd::Constant(spec.input_dim, 2.0), X, X);
  K.diagonal().array() += hp.noise();
  return K;
}

TEST(Nlml, SinglePointZeroResidual) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_noise = std::log(kNoiseFloor);
  Dataset data{MatrixXd::Zero(1, 1), VectorXd::Zero(1)};
  EXPECT_NEAR(nlml(spec, hp, data), kHalfLog2Pi, 1e-9);
}

TEST(Nlml, SinglePointQuadraticTerm) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_noise = std::log(kNoiseFloor);
  Dataset data{MatrixXd::Zero(1, 1), VectorXd::Constant(1, 2.0)};
  EXPECT_NEAR(nlml(spec, hp, data), 2.0 + kHalfLog2Pi, 1e-8);
}

TEST(Nlml, MatchesDenseInverse) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = KernelSpec::squared_exponential(2, trial % 2 == 0);
    const HyperParams hp = random_hp(rng, spec);
    const Dataset data = random_data(rng, 6, 2);
    const VectorXd r = data.y.array() - hp.mean_const;
    MatrixXd K = khat(spec, hp, data.X);
    K.diagonal().array() += kRelativeJitter * hp.variance();
    EXPECT_NEAR(nlml(spec, hp, data), oracle::dense_nlml(K, r), 1e-10);
  }
}

TEST(Nlml, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 3;
    const auto spec = KernelSpec::squared_exponential(d, trial % 4 != 3);
    const HyperParams hp = random_hp(rng, spec);
    const Dataset data = random_data(rng, 8, d);
    const VectorXd g = nlml_grad(spec, hp, data);

    VectorXd x(g.size());
    x << pack_kernel_params(spec, hp), hp.log_noise, hp.mean_const;
    auto f = [&](const VectorXd& v) {
      HyperParams h = hp;
      unpack_kernel_params(spec, v.head(spec.num_kernel_params()), h);
      h.log_noise = v(v.size() - 2);
      h.mean_const = v(v.size() - 1);
      return nlml(spec, h, data);
    };
    EXPECT_LE(oracle::relative_error(g, oracle::fd_gradient(f, x, 1e-6)), 1e-5)
        << "trial " << trial;
  }
}

TEST(Nlml, NoiseGradientIdentity) {
  std::mt19937_64 rng(3);
  const auto spec = KernelSpec::squared_exponential(2);
  const HyperParams hp = random_hp(rng, spec);
  const Dataset data = random_data(rng, 7, 2);
  MatrixXd K = khat(spec, hp, data.X);
  K.diagonal().array() += kRelativeJitter * hp.variance();
  const MatrixXd inv = K.inverse();
  const VectorXd alpha = inv * (data.y.array() - hp.mean_const).matrix();
  const double expected =
      0.5 * inv.trace() * hp.noise() - 0.5 * hp.noise() * alpha.squaredNorm();
  const VectorXd g = nlml_grad(spec, hp, data);
  EXPECT_NEAR(g(g.size() - 2), expected, 1e-10);
  EXPECT_NEAR(g(g.size() - 1), -alpha.sum(), 1e-9);
}

TEST(Nlml, StationaryPointOfSinglePointProblem) {
  // mu = y is stationary in the mean; lengthscales do not enter for M = 1.
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.mean_const = 0.7;
  Dataset data{MatrixXd::Zero(1, 1), VectorXd::Constant(1, 0.7)};
  const VectorXd g = nlml_grad(spec, hp, data);
  EXPECT_LE(std::abs(g(g.size() - 1)), 1e-8);
  EXPECT_LE(std::abs(g(1)), 1e-8);
}

TEST(Nlml, DuplicateRowsWithoutNoiseAreHandledByJitter) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_noise = std::log(kNoiseFloor);
  Dataset data{MatrixXd::Zero(3, 1), VectorXd::Zero(3)};
  EXPECT_TRUE(std::isfinite(nlml(spec, hp, data)));
}

TEST(Nlml, NonFiniteKernelIsNumericalFailure) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_variance = 1e6;
  Dataset data{MatrixXd::Zero(2, 1), VectorXd::Zero(2)};
  data.X(1, 0) = 1.0;
  EXPECT_THROW(nlml(spec, hp, data), NumericalFailure);
}

TEST(Predict, SinglePointClosedForm) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_noise = std::log(kNoiseFloor);
  const TrainedGP model = condition_gp(make_stationary(spec), to_gp_params(spec, hp),
                                       MatrixXd::Zero(1, 1), VectorXd::Ones(1));
  const PosteriorPrediction p = predict_gp(model, MatrixXd::Ones(1, 1));
  EXPECT_NEAR(p.mean(0), std::exp(-1.0), 1e-9);
  EXPECT_NEAR(p.variance(0), 1.0 - std::exp(-2.0), 1e-9);
}

TEST(Predict, MatchesDenseConditioning) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    const int m = 1 + trial % 10;
    const auto spec = KernelSpec::squared_exponential(d);
    const HyperParams hp = random_hp(rng, spec);
    const Dataset data = random_data(rng, m, d);
    const MatrixXd Xq = oracle::uniform_matrix(rng, 5, d);
    const TrainedGP model =
        condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
    const PosteriorPrediction p = predict_gp(model, Xq);

    MatrixXd Kxx = khat(spec, hp, data.X);
    Kxx.diagonal().array() += model.jitter;
    VectorXd theta(d);
    for (int k = 0; k < d; ++k) theta(k) = hp.inv_lengthscale(k);
    const VectorXd two = VectorXd::Constant(d, 2.0);
    const auto ref = oracle::dense_condition(
        oracle::pexp_kernel(hp.variance(), theta, two, Xq, Xq),
        oracle::pexp_kernel(hp.variance(), theta, two, Xq, data.X), Kxx,
        VectorXd::Constant(5, hp.mean_const), VectorXd::Constant(m, hp.mean_const),
        data.y);
    EXPECT_LE((p.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-8) << trial;
    EXPECT_LE((p.variance - ref.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-8)
        << trial;
  }
}

TEST(Predict, InterpolatesAtTrainingPoints) {
  std::mt19937_64 rng(5);
  const auto spec = KernelSpec::squared_exponential(2);
  HyperParams hp = random_hp(rng, spec);
  hp.log_noise = std::log(kNoiseFloor);
  hp.log_inv_lengthscales.setConstant(1.0);
  const Dataset data = random_data(rng, 6, 2);
  const TrainedGP model =
      condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
  const PosteriorPrediction p = predict_gp(model, data.X);
  EXPECT_LE((p.mean - data.y).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(p.variance.maxCoeff(), 1e-6 * hp.variance());
}

TEST(Predict, RevertsToPriorFarAway) {
  std::mt19937_64 rng(6);
  const auto spec = KernelSpec::squared_exponential(2);
  const HyperParams hp = random_hp(rng, spec);
  const Dataset data = random_data(rng, 6, 2);
  const TrainedGP model =
      condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
  const PosteriorPrediction p = predict_gp(model, MatrixXd::Constant(1, 2, 100.0));
  EXPECT_NEAR(p.mean(0), hp.mean_const, 1e-6);
  EXPECT_NEAR(p.variance(0), hp.variance(), 1e-6);
}

TEST(Predict, VarianceBoundedByPrior) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = KernelSpec::squared_exponential(2);
    const HyperParams hp = random_hp(rng, spec);
    const Dataset data = random_data(rng, 8, 2);
    const TrainedGP model =
        condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
    const PosteriorPrediction p =
        predict_gp(model, oracle::uniform_matrix(rng, 20, 2, -1.0, 2.0));
    EXPECT_GE(p.variance.minCoeff(), 0.0);
    EXPECT_LE(p.variance.maxCoeff(), hp.variance() + hp.noise() + 1e-10);
  }
}

TEST(Predict, CholeskyReconstructsAndAlphaSolves) {
  std::mt19937_64 rng(8);
  const auto spec = KernelSpec::squared_exponential(3);
  const HyperParams hp = random_hp(rng, spec);
  const Dataset data = random_data(rng, 9, 3);
  const TrainedGP model =
      condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
  const MatrixXd K = khat(spec, hp, data.X);
  const MatrixXd LLt = model.cholesky_factor * model.cholesky_factor.transpose();
  EXPECT_LE(oracle::relative_error(LLt, K), 1e-8);
  const VectorXd r = data.y.array() - hp.mean_const;
  EXPECT_LE((K * model.alpha - r).norm() / r.norm(), 1e-8);
}

TEST(Predict, DimensionMismatchThrows) {
  const auto spec = KernelSpec::squared_exponential(2);
  const TrainedGP model =
      condition_gp(make_stationary(spec), to_gp_params(spec, HyperParams::defaults(spec)),
                   MatrixXd::Zero(1, 2), VectorXd::Zero(1));
  EXPECT_THROW(predict_gp(model, MatrixXd::Zero(1, 3)), ContractViolation);
}

TEST(Predict, FullCovarianceDiagonalMatchesVariance) {
  std::mt19937_64 rng(9);
  const auto spec = KernelSpec::squared_exponential(1);
  const HyperParams hp = random_hp(rng, spec);
  const Dataset data = random_data(rng, 5, 1);
  const TrainedGP model =
      condition_gp(make_stationary(spec), to_gp_params(spec, hp), data.X, data.y);
  const PosteriorPrediction p = predict_gp(model, oracle::uniform_matrix(rng, 4, 1), true);
  ASSERT_TRUE(p.covariance.has_value());
  EXPECT_LE((p.covariance->diagonal() - p.variance).cwiseAbs().maxCoeff(), 1e-12);
}

Dataset sine_data(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset data;
  data.X = oracle::uniform_matrix(rng, m, 1);
  data.y = (2.0 * std::numbers::pi * data.X.col(0).array()).sin().matrix();
  return data;
}

TEST(Fit, MoreRestartsNeverWorse) {
  const Dataset data = sine_data(8, 10);
  const auto spec = KernelSpec::squared_exponential(1);
  OptimizerConfig one;
  one.restarts = 1;
  OptimizerConfig ten;
  ten.restarts = 10;
  EXPECT_LE(fit_gp(spec, data, ten).nlml_value, fit_gp(spec, data, one).nlml_value + 1e-12);
}

TEST(Fit, DeterministicUnderSeed) {
  const Dataset data = sine_data(10, 11);
  const auto spec = KernelSpec::squared_exponential(1);
  OptimizerConfig cfg;
  cfg.seed = 42;
  const TrainedGP a = fit_gp(spec, data, cfg);
  const TrainedGP b = fit_gp(spec, data, cfg);
  EXPECT_EQ(a.params.kernel, b.params.kernel);
  EXPECT_EQ(a.params.log_noise, b.params.log_noise);
  EXPECT_EQ(a.params.mean, b.params.mean);
}

TEST(Fit, TraceIsNonIncreasing) {
  const Dataset data = sine_data(12, 12);
  const TrainedGP m = fit_gp(KernelSpec::squared_exponential(1), data, OptimizerConfig{});
  ASSERT_FALSE(m.trace.empty());
  for (std::size_t i = 1; i < m.trace.size(); ++i) {
    EXPECT_LE(m.trace[i], m.trace[i - 1]);
  }
  EXPECT_NEAR(m.trace.back(), m.nlml_value, 1e-9 * (1.0 + std::abs(m.nlml_value)));
}

TEST(Fit, ParametersWithinBounds) {
  const Dataset data = sine_data(10, 13);
  OptimizerConfig cfg;
  const TrainedGP m = fit_gp(KernelSpec::squared_exponential(1), data, cfg);
  EXPECT_GE(m.params.kernel.minCoeff(), cfg.log_lower - 1e-12);
  EXPECT_LE(m.params.kernel.maxCoeff(), cfg.log_upper + 1e-12);
  EXPECT_GE(m.params.log_noise, std::log(kNoiseFloor) - 1e-12);
}

TEST(Fit, ConstantOutputsPredictConstant) {
  Dataset data;
  data.X = (VectorXd::LinSpaced(6, 0.0, 1.0)).eval();
  data.y = VectorXd::Constant(6, 3.5);
  const TrainedGP m = fit_gp(KernelSpec::squared_exponential(1), data, OptimizerConfig{});
  const PosteriorPrediction p = predict_gp(m, VectorXd::LinSpaced(11, -0.5, 1.5));
  EXPECT_LE((p.mean.array() - 3.5).abs().maxCoeff(), 1e-6);
}

TEST(Fit, RecoversLengthscaleOfGpDraw) {
  const auto spec = KernelSpec::squared_exponential(1);
  HyperParams truth = HyperParams::defaults(spec);
  truth.log_inv_lengthscales(0) = std::log(20.0);
  truth.log_noise = std::log(1e-6);
  double err = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(100 + s);
    Dataset data;
    data.X = oracle::uniform_matrix(rng, 40, 1);
    MatrixXd K = kernel_eval(spec, truth, data.X, data.X);
    K.diagonal().array() += truth.noise();
    const MatrixXd L = K.llt().matrixL();
    std::normal_distribution<double> n01;
    VectorXd z(40);
    for (auto& v : z) v = n01(rng);
    data.y = L * z;
    OptimizerConfig cfg;
    cfg.standardize = false;
    cfg.seed = static_cast<std::uint64_t>(s);
    const TrainedGP m = fit_gp(spec, data, cfg);
    err += m.params.kernel(1) - truth.log_inv_lengthscales(0);
  }
  EXPECT_LE(std::abs(err / seeds), 0.5);
}

TEST(Fit, InvalidDataThrows) {
  Dataset data{MatrixXd::Zero(2, 1), VectorXd::Zero(3)};
  EXPECT_THROW(fit_gp(KernelSpec::squared_exponential(1), data, OptimizerConfig{}),
               ContractViolation);
}

TEST(Linalg, JitterEscalationFailsOnIndefinite) {
  MatrixXd K(2, 2);
  K << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(factor_with_jitter(K, 1.0, VectorXd::Zero(1)), NumericalFailure);
}

TEST(Linalg, JitterEscalatesOnSingular) {
  const MatrixXd K = MatrixXd::Ones(3, 3);
  const JitteredCholesky c = factor_with_jitter(K, 1.0, VectorXd());
  EXPECT_GE(c.jitter, 1e-10);
  EXPECT_LE(c.jitter, 1e-4);
}

}  // namespace
}  // namespace mfgp
