#include "mfgp/nargp.hpp"

#include "mfgp/error.hpp"
#include "mfgp/random.hpp"

#include <cmath>
#include <random>

namespace mfgp {

struct CompositeCovariance::Parts {
  KernelSpec x_spec;
  KernelSpec f_spec;
  HyperParams z;
  HyperParams f;
  HyperParams g;
};

CompositeCovariance::CompositeCovariance(int x_dim, bool ard)
    : d_(x_dim), ard_(ard), nls_(ard ? x_dim : 1) {
  MFGP_REQUIRE(x_dim >= 1, "composite kernel needs at least one x dimension");
}

int CompositeCovariance::num_params() const { return 3 + 2 * nls_; }

CompositeCovariance::Parts CompositeCovariance::split(const VectorXd& params) const {
  MFGP_REQUIRE(params.size() == num_params(), "composite kernel parameter count");
  Parts p;
  p.x_spec = KernelSpec::squared_exponential(d_, ard_);
  p.f_spec = KernelSpec::squared_exponential(1);
  p.z = HyperParams::defaults(p.x_spec);
  p.z.log_variance = params(0);
  p.z.log_inv_lengthscales = params.segment(1, nls_);
  p.f = HyperParams::defaults(p.f_spec);
  p.f.log_variance = 0.0;
  p.f.log_inv_lengthscales = params.segment(1 + nls_, 1);
  p.g = HyperParams::defaults(p.x_spec);
  p.g.log_variance = params(2 + nls_);
  p.g.log_inv_lengthscales = params.segment(3 + nls_, nls_);
  return p;
}

MatrixXd CompositeCovariance::eval(const VectorXd& params, const MatrixXd& X,
                                   const MatrixXd& X2) const {
  MFGP_REQUIRE(X.cols() == d_ + 1 && X2.cols() == d_ + 1,
               "composite kernel inputs must have d + 1 columns");
  const Parts p = split(params);
  const MatrixXd Kz = kernel_eval(p.x_spec, p.z, X.leftCols(d_), X2.leftCols(d_));
  const MatrixXd Kf = kernel_eval(p.f_spec, p.f, X.rightCols(1), X2.rightCols(1));
  const MatrixXd Kg = kernel_eval(p.x_spec, p.g, X.leftCols(d_), X2.leftCols(d_));
  return Kz.cwiseProduct(Kf) + Kg;
}

VectorXd CompositeCovariance::diag(const VectorXd& params, const MatrixXd& X) const {
  return VectorXd::Constant(X.rows(), prior_variance(params));
}

std::vector<MatrixXd> CompositeCovariance::grad_cross(const VectorXd& params,
                                                      const MatrixXd& X,
                                                      const MatrixXd& X2) const {
  MFGP_REQUIRE(X.cols() == d_ + 1 && X2.cols() == d_ + 1,
               "composite kernel inputs must have d + 1 columns");
  const Parts p = split(params);
  const auto Xx = X.leftCols(d_);
  const auto X2x = X2.leftCols(d_);
  const auto dz = kernel_grad_cross(p.x_spec, p.z, Xx, X2x);
  const auto df = kernel_grad_cross(p.f_spec, p.f, X.rightCols(1), X2.rightCols(1));
  const auto dg = kernel_grad_cross(p.x_spec, p.g, Xx, X2x);
  const MatrixXd& Kz = dz[0];
  const MatrixXd Kf = kernel_eval(p.f_spec, p.f, X.rightCols(1), X2.rightCols(1));

  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(num_params()));
  for (int j = 0; j <= nls_; ++j) {
    out.push_back(dz[static_cast<std::size_t>(j)].cwiseProduct(Kf));
  }
  out.push_back(Kz.cwiseProduct(df[1]));
  for (int j = 0; j <= nls_; ++j) {
    out.push_back(dg[static_cast<std::size_t>(j)]);
  }
  return out;
}

std::vector<VectorXd> CompositeCovariance::grad_diag(const VectorXd& params,
                                                     const MatrixXd& X) const {
  std::vector<VectorXd> out(static_cast<std::size_t>(num_params()),
                            VectorXd::Zero(X.rows()));
  out[0].setConstant(std::exp(params(0)));
  out[static_cast<std::size_t>(2 + nls_)].setConstant(std::exp(params(2 + nls_)));
  return out;
}

MatrixXd CompositeCovariance::input_grad(const VectorXd& params, const MatrixXd& X,
                                         const MatrixXd& X2, int column) const {
  MFGP_REQUIRE(column >= 0 && column <= d_, "input_grad column out of range");
  const Parts p = split(params);
  const auto Xx = X.leftCols(d_);
  const auto X2x = X2.leftCols(d_);
  const auto Xf = X.rightCols(1);
  const auto X2f = X2.rightCols(1);
  if (column == d_) {
    return kernel_eval(p.x_spec, p.z, Xx, X2x)
        .cwiseProduct(kernel_input_grad(p.f_spec, p.f, Xf, X2f, 0));
  }
  return kernel_input_grad(p.x_spec, p.z, Xx, X2x, column)
             .cwiseProduct(kernel_eval(p.f_spec, p.f, Xf, X2f)) +
         kernel_input_grad(p.x_spec, p.g, Xx, X2x, column);
}

double CompositeCovariance::prior_variance(const VectorXd& params) const {
  return std::exp(params(0)) + std::exp(params(2 + nls_));
}

VectorXd CompositeCovariance::prior_variance_grad(const VectorXd& params) const {
  VectorXd g = VectorXd::Zero(num_params());
  g(0) = std::exp(params(0));
  g(2 + nls_) = std::exp(params(2 + nls_));
  return g;
}

VectorXd CompositeCovariance::default_params() const {
  VectorXd p(num_params());
  p(0) = 0.0;
  p.segment(1, nls_).setConstant(std::log(5.0));
  p(1 + nls_) = std::log(5.0);
  p(2 + nls_) = std::log(0.1);
  p.segment(3 + nls_, nls_).setConstant(std::log(5.0));
  return p;
}

void CompositeCovariance::param_bounds(double log_lower, double log_upper,
                                       VectorXd& lower, VectorXd& upper) const {
  init_bounds(log_lower, log_upper, lower, upper);
  lower(0) = log_lower + std::log(1e-5);
  lower(2 + nls_) = log_lower + std::log(1e-5);
}

void CompositeCovariance::init_bounds(double log_lower, double log_upper,
                                      VectorXd& lower, VectorXd& upper) const {
  lower = VectorXd::Constant(num_params(), log_lower);
  upper = VectorXd::Constant(num_params(), log_upper);
}

int NARGPModel::num_hyperparameters() const {
  int n = 0;
  for (const auto& gp : level_gps) n += gp.num_hyperparameters();
  return n;
}

namespace {

MatrixXd augment(const MatrixXd& X, const VectorXd& f) {
  MatrixXd A(X.rows(), X.cols() + 1);
  A << X, f;
  return A;
}

}  // namespace

VectorXd nargp_plugin_mean(const NARGPModel& model, const MatrixXd& X, int level) {
  MFGP_REQUIRE(level >= 0 && level < model.num_levels(), "level out of range");
  VectorXd m = predict_gp(model.level_gps[0], X).mean;
  for (int t = 1; t <= level; ++t) {
    m = predict_gp(model.level_gps[static_cast<std::size_t>(t)], augment(X, m)).mean;
  }
  return m;
}

NARGPModel nargp_fit(const MultiFidelityDataset& data, const OptimizerConfig& config,
                     bool nested) {
  validate(data, 2);
  if (nested) require_nested(data, 1e-12);
  const int d = data.dim();
  NARGPModel model;
  model.nested = nested;
  model.level_gps.push_back(
      fit_gp(KernelSpec::squared_exponential(d), data.levels[0], config));

  const auto cov = std::make_shared<CompositeCovariance>(d);
  for (int t = 1; t < data.num_levels(); ++t) {
    const Dataset& lvl = data.levels[static_cast<std::size_t>(t)];
    const MatrixXd A = augment(lvl.X, nargp_plugin_mean(model, lvl.X, t - 1));
    GpFitProblem problem;
    problem.covariance = cov;
    InputScaler in = InputScaler::identity(d + 1);
    OutputScaler out;
    if (config.standardize) {
      in = InputScaler::unit_box(A);
      out = OutputScaler::standardize(lvl.y);
    }
    problem.X = in.apply(A);
    problem.y = out.apply(lvl.y);
    TrainedGP gp = fit_exact_gp(problem, config);
    gp.input_scaler = in;
    gp.output_scaler = out;
    model.level_gps.push_back(std::move(gp));
  }
  return model;
}

NargpComponents nargp_components(const NARGPModel& model, const MatrixXd& X_query,
                                 const NargpPredictOptions& options) {
  MFGP_REQUIRE(options.n_samples >= 2, "n_samples must be >= 2");
  MFGP_REQUIRE(model.num_levels() >= 1, "model has no levels");
  const int target = options.level < 0 ? model.num_levels() - 1 : options.level;
  MFGP_REQUIRE(target < model.num_levels(), "level out of range");
  MFGP_REQUIRE(X_query.cols() == model.level_gps[0].X_train.cols(),
               "query dimension differs from training dimension");

  const PosteriorPrediction base = predict_gp(model.level_gps[0], X_query);
  const Eigen::Index n = X_query.rows();
  const int S = options.n_samples;
  NargpComponents out;
  out.means.resize(S, n);
  out.variances.resize(S, n);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    const MatrixXd Xi = X_query.row(i).replicate(S, 1);
    VectorXd mu = VectorXd::Constant(S, base.mean(i));
    VectorXd var = VectorXd::Constant(S, base.variance(i));
    for (int t = 1; t <= target; ++t) {
      VectorXd f(S);
      for (int j = 0; j < S; ++j) {
        f(j) = mu(j) + std::sqrt(std::max(var(j), 0.0)) * normal(rng);
      }
      const PosteriorPrediction p =
          predict_gp(model.level_gps[static_cast<std::size_t>(t)], augment(Xi, f));
      mu = p.mean;
      var = p.variance;
    }
    out.means.col(i) = mu;
    out.variances.col(i) = var;
  }
  return out;
}

PosteriorPrediction nargp_predict(const NARGPModel& model, const MatrixXd& X_query,
                                  const NargpPredictOptions& options) {
  MFGP_REQUIRE(options.n_samples >= 2, "n_samples must be >= 2");
  const int target = options.level < 0 ? model.num_levels() - 1 : options.level;
  if (target == 0) return predict_gp(model.level_gps[0], X_query);
  const NargpComponents c = nargp_components(model, X_query, options);
  PosteriorPrediction out;
  out.mean = c.means.colwise().mean().transpose();
  out.variance.resize(X_query.rows());
  for (Eigen::Index i = 0; i < X_query.rows(); ++i) {
    out.variance(i) = c.variances.col(i).mean() +
                      (c.means.col(i).array() - out.mean(i)).square().mean();
  }
  return out;
}

}  // namespace mfgp
