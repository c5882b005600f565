#include "mfgp/gp.hpp"

#include "mfgp/error.hpp"
#include "mfgp/linalg.hpp"
#include "mfgp/optimize.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

namespace mfgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

VectorXd flatten(const GpParams& p) {
  VectorXd v(p.kernel.size() + 2 + p.coefs.size());
  v << p.kernel, p.log_noise, p.mean, p.coefs;
  return v;
}

MatrixXd regressors_or_empty(const MatrixXd& H, Eigen::Index rows) {
  if (H.size() == 0) {
    return MatrixXd(rows, 0);
  }
  return H;
}

struct Evidence {
  JitteredCholesky chol;
  VectorXd residual;
  VectorXd alpha;
  double value = 0.0;
};

Evidence evaluate(const Covariance& cov, const GpParams& p, const MatrixXd& X,
                  const VectorXd& y, const MatrixXd& H) {
  MatrixXd K = cov.eval(p.kernel, X, X);
  K.diagonal().array() += p.noise();
  Evidence ev;
  ev.chol = factor_with_jitter(K, cov.prior_variance(p.kernel), flatten(p));
  ev.residual = y.array() - p.mean;
  if (H.cols() > 0) {
    ev.residual -= H * p.coefs;
  }
  ev.alpha = ev.chol.solve(ev.residual);
  ev.value = 0.5 * ev.residual.dot(ev.alpha) + 0.5 * ev.chol.log_det() +
             0.5 * static_cast<double>(X.rows()) * kLog2Pi;
  return ev;
}

}  // namespace

void validate(const Dataset& data) {
  MFGP_REQUIRE(data.X.rows() >= 1, "dataset needs at least one point");
  MFGP_REQUIRE(data.X.rows() == data.y.size(),
               "dataset X rows and y length differ");
  MFGP_REQUIRE(data.X.allFinite() && data.y.allFinite(),
               "dataset contains non-finite values");
}

InputScaler InputScaler::identity(int d) {
  return {VectorXd::Zero(d), VectorXd::Ones(d)};
}

InputScaler InputScaler::unit_box(const MatrixXd& X) {
  InputScaler s;
  s.offset = X.colwise().minCoeff().transpose();
  s.scale = (X.colwise().maxCoeff().transpose() - s.offset);
  for (Eigen::Index k = 0; k < s.scale.size(); ++k) {
    if (!(s.scale(k) > 0.0)) {
      s.scale(k) = 1.0;
    }
  }
  return s;
}

MatrixXd InputScaler::apply(const MatrixXd& X) const {
  MFGP_REQUIRE(X.cols() == offset.size(), "input dimension mismatch");
  return ((X.rowwise() - offset.transpose()).array().rowwise() /
          scale.transpose().array())
      .matrix();
}

MatrixXd InputScaler::invert(const MatrixXd& Xs) const {
  return ((Xs.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
          offset.transpose());
}

OutputScaler OutputScaler::standardize(const VectorXd& y) {
  OutputScaler s;
  s.mean = y.mean();
  const double var =
      y.size() > 1 ? (y.array() - s.mean).square().sum() / static_cast<double>(y.size())
                   : 0.0;
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

double GpParams::noise() const {
  return std::exp(std::max(log_noise, std::log(kNoiseFloor)));
}

const KernelSpec& TrainedGP::spec() const {
  const auto* st = dynamic_cast<const StationaryCovariance*>(covariance.get());
  if (st == nullptr) {
    throw ContractViolation("model does not use a stationary kernel");
  }
  return st->spec();
}

HyperParams TrainedGP::hp() const { return to_hyper_params(spec(), params); }

int TrainedGP::num_hyperparameters() const {
  return covariance->num_params() + 2 + static_cast<int>(params.coefs.size());
}

GpParams to_gp_params(const KernelSpec& spec, const HyperParams& hp) {
  GpParams p;
  p.kernel = pack_kernel_params(spec, hp);
  p.log_noise = hp.log_noise;
  p.mean = hp.mean_const;
  return p;
}

HyperParams to_hyper_params(const KernelSpec& spec, const GpParams& params) {
  HyperParams hp = HyperParams::defaults(spec);
  unpack_kernel_params(spec, params.kernel, hp);
  hp.log_noise = params.log_noise;
  hp.mean_const = params.mean;
  return hp;
}

double exact_nlml(const Covariance& cov, const GpParams& params, const MatrixXd& X,
                  const VectorXd& y, const MatrixXd& H_in, GpParams* grad) {
  MFGP_REQUIRE(X.rows() == y.size(), "X rows and y length differ");
  MFGP_REQUIRE(X.cols() == cov.input_dim(), "input dimension mismatch");
  const MatrixXd H = regressors_or_empty(H_in, X.rows());
  MFGP_REQUIRE(H.cols() == params.coefs.size(),
               "regressor columns and coefficient count differ");
  const Evidence ev = evaluate(cov, params, X, y, H);
  if (grad == nullptr) {
    return ev.value;
  }

  // W = K^-1 - alpha alpha^T; dNLML/dtheta = 0.5 tr(W dK/dtheta).
  MatrixXd W = ev.chol.inverse();
  W.noalias() -= ev.alpha * ev.alpha.transpose();
  const double trace_w = W.trace();

  const auto dK = cov.grad(params.kernel, X);
  const VectorXd dscale = cov.prior_variance_grad(params.kernel);
  grad->kernel.resize(params.kernel.size());
  for (std::size_t j = 0; j < dK.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    grad->kernel(jj) = 0.5 * (W.array() * dK[j].array()).sum() +
                       0.5 * ev.chol.relative_jitter * dscale(jj) * trace_w;
  }
  grad->log_noise =
      params.log_noise >= std::log(kNoiseFloor) ? 0.5 * params.noise() * trace_w : 0.0;
  grad->mean = -ev.alpha.sum();
  grad->coefs = -(H.transpose() * ev.alpha);
  return ev.value;
}

double nlml(const KernelSpec& spec, const HyperParams& hp, const Dataset& data) {
  validate(spec, hp);
  validate(data);
  const StationaryCovariance cov(spec);
  return exact_nlml(cov, to_gp_params(spec, hp), data.X, data.y, MatrixXd());
}

VectorXd nlml_grad(const KernelSpec& spec, const HyperParams& hp,
                   const Dataset& data) {
  validate(spec, hp);
  validate(data);
  const StationaryCovariance cov(spec);
  GpParams g;
  exact_nlml(cov, to_gp_params(spec, hp), data.X, data.y, MatrixXd(), &g);
  VectorXd out(g.kernel.size() + 2);
  out << g.kernel, g.log_noise, g.mean;
  return out;
}

TrainedGP condition_gp(CovariancePtr cov, const GpParams& params, const MatrixXd& X,
                       const VectorXd& y, const MatrixXd& H_in) {
  MFGP_REQUIRE(cov != nullptr, "covariance must be set");
  MFGP_REQUIRE(X.rows() >= 1 && X.rows() == y.size(), "invalid training data");
  MFGP_REQUIRE(X.cols() == cov->input_dim(), "input dimension mismatch");
  const MatrixXd H = regressors_or_empty(H_in, X.rows());
  MFGP_REQUIRE(H.cols() == params.coefs.size(),
               "regressor columns and coefficient count differ");
  const Evidence ev = evaluate(*cov, params, X, y, H);
  TrainedGP model;
  model.covariance = std::move(cov);
  model.params = params;
  model.X_train = X;
  model.H_train = H;
  model.y_train = y;
  model.cholesky_factor = ev.chol.lower();
  model.alpha = ev.alpha;
  model.jitter = ev.chol.jitter;
  model.nlml_value = ev.value;
  model.input_scaler = InputScaler::identity(static_cast<int>(X.cols()));
  return model;
}

TrainedGP fit_exact_gp(const GpFitProblem& problem, const OptimizerConfig& config) {
  const Covariance& cov = *problem.covariance;
  const MatrixXd H = regressors_or_empty(problem.H, problem.X.rows());
  MFGP_REQUIRE(problem.X.rows() >= 1 && problem.X.rows() == problem.y.size(),
               "invalid training data");
  const auto p = cov.num_params();
  const auto q = H.cols();
  const bool coefs_free = !problem.fixed_coefs.has_value();
  if (!coefs_free) {
    MFGP_REQUIRE(problem.fixed_coefs->size() == q,
                 "fixed coefficient count differs from regressor columns");
  }
  const auto n_free = p + 2 + (coefs_free ? q : 0);

  const VectorXd& y = problem.y;
  const double y_mean = y.mean();
  const double raw_var = (y.array() - y_mean).square().mean();
  const double y_var = raw_var > 1e-12 ? raw_var : 1.0;
  const double y_span = (y.array() - y_mean).abs().maxCoeff();

  auto unpack = [&](const VectorXd& x) {
    GpParams gp;
    gp.kernel = x.head(p);
    gp.log_noise = x(p);
    gp.mean = x(p + 1);
    gp.coefs = coefs_free ? VectorXd(x.tail(q)) : *problem.fixed_coefs;
    return gp;
  };

  Objective objective = [&](const VectorXd& x, VectorXd* g) {
    const GpParams gp = unpack(x);
    if (g == nullptr) {
      return exact_nlml(cov, gp, problem.X, y, H, nullptr);
    }
    GpParams grad;
    const double v = exact_nlml(cov, gp, problem.X, y, H, &grad);
    g->resize(n_free);
    g->head(p) = grad.kernel;
    (*g)(p) = grad.log_noise;
    (*g)(p + 1) = grad.mean;
    if (coefs_free) {
      g->tail(q) = grad.coefs;
    }
    return v;
  };

  Box box;
  Box init;
  {
    VectorXd klo;
    VectorXd khi;
    cov.param_bounds(config.log_lower, config.log_upper, klo, khi);
    box.lower.resize(n_free);
    box.upper.resize(n_free);
    box.lower.head(p) = klo;
    box.upper.head(p) = khi;
    box.lower(p) = std::log(kNoiseFloor);
    box.upper(p) = std::log(config.max_relative_noise * y_var);
    box.lower(p + 1) = y_mean - 10.0 * (y_span + 1.0);
    box.upper(p + 1) = y_mean + 10.0 * (y_span + 1.0);
    if (coefs_free && q > 0) {
      box.lower.tail(q).setConstant(-config.coef_bound);
      box.upper.tail(q).setConstant(config.coef_bound);
    }
    init = box;
    cov.init_bounds(config.log_lower, config.log_upper, klo, khi);
    init.lower.head(p) = klo;
    init.upper.head(p) = khi;
    init.lower(p) = std::log(1e-8 * y_var);
    init.upper(p) = std::log(1e-2 * y_var);
    init.lower(p + 1) = y.minCoeff();
    init.upper(p + 1) = y.maxCoeff();
    if (coefs_free && q > 0) {
      init.lower.tail(q).setConstant(std::max(-2.0, -config.coef_bound));
      init.upper.tail(q).setConstant(std::min(2.0, config.coef_bound));
    }
  }

  VectorXd first(n_free);
  first.head(p) = cov.default_params();
  first(p) = std::log(1e-6 * y_var);
  first(p + 1) = y_mean;
  if (coefs_free && q > 0) {
    first.tail(q).setConstant(std::min(1.0, config.coef_bound));
  }
  first = box.clamp(first);

  BfgsOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.gradient_tolerance = config.gradient_tolerance;
  const MultiStartResult res =
      multi_start_minimize(objective, box, init, config.restarts, config.seed, first, opts);

  TrainedGP model = condition_gp(problem.covariance, unpack(res.best.x), problem.X, y, H);
  model.trace = res.best.trace;
  model.diagnostics = res.diagnostics;
  return model;
}

TrainedGP fit_gp(const KernelSpec& spec, const Dataset& data,
                 const OptimizerConfig& config) {
  validate(data);
  MFGP_REQUIRE(data.dim() == spec.input_dim,
               "dataset dimension differs from the kernel input_dim");
  GpFitProblem problem;
  problem.covariance = make_stationary(spec);
  InputScaler in = InputScaler::identity(spec.input_dim);
  OutputScaler out;
  if (config.standardize) {
    in = InputScaler::unit_box(data.X);
    out = OutputScaler::standardize(data.y);
  }
  problem.X = in.apply(data.X);
  problem.y = out.apply(data.y);
  TrainedGP model = fit_exact_gp(problem, config);
  model.input_scaler = in;
  model.output_scaler = out;
  return model;
}

PosteriorPrediction predict_gp(const TrainedGP& model, const MatrixXd& X_query,
                               bool full_covariance) {
  MFGP_REQUIRE(model.H_train.cols() == 0,
               "model has regressors; pass H_query to predict_gp");
  return predict_gp(model, X_query, MatrixXd(X_query.rows(), 0), full_covariance);
}

PosteriorPrediction predict_gp(const TrainedGP& model, const MatrixXd& X_query,
                               const MatrixXd& H_query, bool full_covariance) {
  MFGP_REQUIRE(X_query.cols() == model.X_train.cols(),
               "query dimension differs from training dimension");
  MFGP_REQUIRE(H_query.rows() == X_query.rows() &&
                   H_query.cols() == model.H_train.cols(),
               "query regressors have the wrong shape");
  const Covariance& cov = *model.covariance;
  const MatrixXd Xs = model.input_scaler.apply(X_query);
  const MatrixXd Kqx = cov.eval(model.params.kernel, Xs, model.X_train);

  VectorXd mean = VectorXd::Constant(Xs.rows(), model.params.mean);
  if (H_query.cols() > 0) {
    mean += H_query * model.params.coefs;
  }
  mean.noalias() += Kqx * model.alpha;

  const MatrixXd V = model.cholesky_factor.triangularView<Eigen::Lower>().solve(
      Kqx.transpose());
  VectorXd var = cov.diag(model.params.kernel, Xs) - V.colwise().squaredNorm().transpose();

  PosteriorPrediction pred;
  const double clamp_warn = 1e-8 * cov.prior_variance(model.params.kernel);
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    if (var(i) < 0.0) {
      pred.max_clamped = std::max(pred.max_clamped, -var(i));
      var(i) = 0.0;
    }
  }
  if (pred.max_clamped > clamp_warn) {
    std::cerr << "mfgp: clamped negative posterior variance of magnitude "
              << pred.max_clamped << '\n';
  }
  pred.mean = model.output_scaler.invert_mean(mean);
  pred.variance = model.output_scaler.invert_variance(var);
  if (full_covariance) {
    MatrixXd C = cov.eval(model.params.kernel, Xs, Xs);
    C.noalias() -= V.transpose() * V;
    pred.covariance = C * (model.output_scaler.scale * model.output_scaler.scale);
  }
  return pred;
}

}  // namespace mfgp
