#include "mfgp/joint.hpp"

#include "mfgp/error.hpp"
#include "mfgp/linalg.hpp"
#include "mfgp/optimize.hpp"

#include <cmath>
#include <iostream>

namespace mfgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

VectorXd flatten(const JointParams& p) {
  VectorXd v(p.cov.size() + p.log_noise.size() + p.mean.size());
  v << p.cov, p.log_noise, p.mean;
  return v;
}

double level_noise(double log_noise) {
  return std::exp(std::max(log_noise, std::log(kNoiseFloor)));
}

struct JointEvidence {
  JitteredCholesky chol;
  VectorXd alpha;
  VectorXd scales;
  double value = 0.0;
};

// Per-level mean of the diagonal of D, spread back over the rows.
VectorXd level_means(const VectorXd& d, const Eigen::VectorXi& lx) {
  const int s = lx.size() > 0 ? lx.maxCoeff() + 1 : 0;
  VectorXd sum = VectorXd::Zero(s);
  VectorXd count = VectorXd::Zero(s);
  for (Eigen::Index i = 0; i < lx.size(); ++i) {
    sum(lx(i)) += d(i);
    count(lx(i)) += 1.0;
  }
  VectorXd out(lx.size());
  for (Eigen::Index i = 0; i < lx.size(); ++i) out(i) = sum(lx(i)) / count(lx(i));
  return out;
}

JointEvidence evaluate(const LevelCovariance& cov, const JointParams& p,
                       const MatrixXd& X, const Eigen::VectorXi& lev,
                       const VectorXd& y) {
  const auto n = X.rows();
  MatrixXd K = cov.eval(p.cov, X, lev, X, lev);
  JointEvidence ev;
  ev.scales = cov.jitter_scales(p.cov, X, lev);
  VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) += level_noise(p.log_noise(lev(i)));
    r(i) = y(i) - p.mean(lev(i));
  }
  ev.chol = factor_with_jitter(K, ev.scales, flatten(p));
  ev.alpha = ev.chol.solve(r);
  ev.value = 0.5 * r.dot(ev.alpha) + 0.5 * ev.chol.log_det() +
             0.5 * static_cast<double>(n) * kLog2Pi;
  return ev;
}

void check_shapes(const LevelCovariance& cov, const JointParams& p) {
  MFGP_REQUIRE(p.cov.size() == cov.num_params(), "covariance parameter count mismatch");
  MFGP_REQUIRE(p.log_noise.size() == cov.num_levels() && p.mean.size() == cov.num_levels(),
               "need one noise and one mean per level");
}

}  // namespace

VectorXd LevelCovariance::jitter_scales(const VectorXd& params, const MatrixXd& X,
                                       const Eigen::VectorXi& lx) const {
  return level_means(diag(params, X, lx), lx);
}

MatrixXd LevelCovariance::jitter_scales_grad(const VectorXd& /*params*/, const MatrixXd& X,
                                             const Eigen::VectorXi& lx,
                                             const std::vector<MatrixXd>& dK) const {
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(dK.size()));
  for (std::size_t j = 0; j < dK.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = level_means(dK[j].diagonal(), lx);
  }
  return out;
}

double joint_nlml(const LevelCovariance& cov, const JointParams& params,
                  const MatrixXd& X, const Eigen::VectorXi& levels,
                  const VectorXd& y, JointParams* grad) {
  check_shapes(cov, params);
  MFGP_REQUIRE(X.rows() == y.size() && X.rows() == levels.size(),
               "inputs, levels and outputs differ in length");
  const JointEvidence ev = evaluate(cov, params, X, levels, y);
  if (grad == nullptr) {
    return ev.value;
  }
  MatrixXd W = ev.chol.inverse();
  W.noalias() -= ev.alpha * ev.alpha.transpose();
  const auto dK = cov.grad(params.cov, X, levels);
  const MatrixXd dscales = cov.jitter_scales_grad(params.cov, X, levels, dK);
  const VectorXd w_diag = W.diagonal();
  grad->cov.resize(params.cov.size());
  for (std::size_t j = 0; j < dK.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    grad->cov(jj) = 0.5 * (W.array() * dK[j].array()).sum() +
                    0.5 * ev.chol.relative_jitter * w_diag.dot(dscales.col(jj));
  }
  const auto s = params.log_noise.size();
  grad->log_noise = VectorXd::Zero(s);
  grad->mean = VectorXd::Zero(s);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int l = levels(i);
    if (params.log_noise(l) >= std::log(kNoiseFloor)) {
      grad->log_noise(l) += 0.5 * level_noise(params.log_noise(l)) * W(i, i);
    }
    grad->mean(l) -= ev.alpha(i);
  }
  return ev.value;
}

namespace {

JointModel condition_scaled(LevelCovariancePtr cov, const JointParams& params,
                            const MatrixXd& X, const Eigen::VectorXi& lev,
                            const VectorXd& y) {
  const JointEvidence ev = evaluate(*cov, params, X, lev, y);
  JointModel m;
  m.covariance = std::move(cov);
  m.params = params;
  m.X_train = X;
  m.levels = lev;
  m.y_train = y;
  m.cholesky_factor = ev.chol.lower();
  m.alpha = ev.alpha;
  m.jitter = ev.chol.relative_jitter * ev.scales;
  m.nlml_value = ev.value;
  return m;
}

}  // namespace

JointModel condition_joint(LevelCovariancePtr cov, const JointParams& params,
                           const MultiFidelityDataset& data) {
  MFGP_REQUIRE(cov != nullptr, "covariance must be set");
  validate(data, 1);
  check_shapes(*cov, params);
  MFGP_REQUIRE(data.num_levels() == cov->num_levels(),
               "dataset and covariance disagree on the number of levels");
  JointModel m = condition_scaled(std::move(cov), params, data.stacked_inputs(),
                                  data.stacked_levels(), data.stacked_outputs());
  m.input_scaler = InputScaler::identity(data.dim());
  m.output_scalers.assign(static_cast<std::size_t>(data.num_levels()), OutputScaler{});
  return m;
}

JointModel fit_joint(LevelCovariancePtr cov_ptr, const MultiFidelityDataset& data,
                     const OptimizerConfig& config) {
  MFGP_REQUIRE(cov_ptr != nullptr, "covariance must be set");
  validate(data, 1);
  const LevelCovariance& cov = *cov_ptr;
  const int s = data.num_levels();
  MFGP_REQUIRE(s == cov.num_levels(),
               "dataset and covariance disagree on the number of levels");
  MFGP_REQUIRE(data.dim() == cov.input_dim(), "dataset dimension mismatch");

  const MatrixXd X_raw = data.stacked_inputs();
  const Eigen::VectorXi lev = data.stacked_levels();
  InputScaler in = InputScaler::identity(data.dim());
  std::vector<OutputScaler> outs(static_cast<std::size_t>(s));
  if (config.standardize) {
    in = InputScaler::unit_box(X_raw);
    for (int t = 0; t < s; ++t) {
      outs[static_cast<std::size_t>(t)] =
          OutputScaler::standardize(data.levels[static_cast<std::size_t>(t)].y);
    }
  }
  const MatrixXd X = in.apply(X_raw);
  VectorXd y(X.rows());
  {
    Eigen::Index at = 0;
    for (int t = 0; t < s; ++t) {
      const Dataset& d = data.levels[static_cast<std::size_t>(t)];
      y.segment(at, d.size()) = outs[static_cast<std::size_t>(t)].apply(d.y);
      at += d.size();
    }
  }

  const auto p = cov.num_params();
  const auto n_free = p + 2 * s;
  auto unpack = [&](const VectorXd& x) {
    JointParams jp;
    jp.cov = x.head(p);
    jp.log_noise = x.segment(p, s);
    jp.mean = x.segment(p + s, s);
    return jp;
  };
  Objective objective = [&](const VectorXd& x, VectorXd* g) {
    const JointParams jp = unpack(x);
    if (g == nullptr) {
      return joint_nlml(cov, jp, X, lev, y, nullptr);
    }
    JointParams gp;
    const double v = joint_nlml(cov, jp, X, lev, y, &gp);
    g->resize(n_free);
    *g << gp.cov, gp.log_noise, gp.mean;
    return v;
  };

  Box box;
  Box init;
  box.lower.resize(n_free);
  box.upper.resize(n_free);
  init.lower.resize(n_free);
  init.upper.resize(n_free);
  VectorXd first(n_free);
  {
    VectorXd lo;
    VectorXd hi;
    cov.param_bounds(config, lo, hi);
    box.lower.head(p) = lo;
    box.upper.head(p) = hi;
    cov.init_bounds(config, lo, hi);
    init.lower.head(p) = lo;
    init.upper.head(p) = hi;
    first.head(p) = cov.default_params();
  }
  for (int t = 0; t < s; ++t) {
    const Dataset& d = data.levels[static_cast<std::size_t>(t)];
    const VectorXd yt = outs[static_cast<std::size_t>(t)].apply(d.y);
    const double m = yt.mean();
    const double raw_var = (yt.array() - m).square().mean();
    const double var = raw_var > 1e-12 ? raw_var : 1.0;
    const double span = (yt.array() - m).abs().maxCoeff();
    box.lower(p + t) = std::log(kNoiseFloor);
    box.upper(p + t) = std::log(config.max_relative_noise * var);
    init.lower(p + t) = std::log(1e-8 * var);
    init.upper(p + t) = std::log(1e-2 * var);
    first(p + t) = std::log(1e-6 * var);
    box.lower(p + s + t) = m - 10.0 * (span + 1.0);
    box.upper(p + s + t) = m + 10.0 * (span + 1.0);
    init.lower(p + s + t) = yt.minCoeff();
    init.upper(p + s + t) = yt.maxCoeff();
    first(p + s + t) = m;
  }
  first = box.clamp(first);
  init.lower = init.lower.cwiseMax(box.lower);
  init.upper = init.upper.cwiseMin(box.upper);

  BfgsOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.gradient_tolerance = config.gradient_tolerance;
  const MultiStartResult res =
      multi_start_minimize(objective, box, init, config.restarts, config.seed, first, opts);

  JointModel model = condition_scaled(cov_ptr, unpack(res.best.x), X, lev, y);
  model.input_scaler = in;
  model.output_scalers = outs;
  model.trace = res.best.trace;
  model.diagnostics = res.diagnostics;
  return model;
}

PosteriorPrediction predict_joint(const JointModel& model, const MatrixXd& X_query,
                                  int level, bool full_covariance) {
  const LevelCovariance& cov = *model.covariance;
  MFGP_REQUIRE(level >= 0 && level < cov.num_levels(), "target level out of range");
  MFGP_REQUIRE(X_query.cols() == model.X_train.cols(),
               "query dimension differs from training dimension");
  const MatrixXd Xs = model.input_scaler.apply(X_query);
  const Eigen::VectorXi lq = Eigen::VectorXi::Constant(Xs.rows(), level);
  const MatrixXd Kqx = cov.eval(model.params.cov, Xs, lq, model.X_train, model.levels);
  VectorXd mean = VectorXd::Constant(Xs.rows(), model.params.mean(level));
  mean.noalias() += Kqx * model.alpha;
  const MatrixXd V = model.cholesky_factor.triangularView<Eigen::Lower>().solve(
      Kqx.transpose());
  const VectorXd prior = cov.diag(model.params.cov, Xs, lq);
  VectorXd var = prior - V.colwise().squaredNorm().transpose();

  PosteriorPrediction pred;
  const double prior_scale = prior.size() > 0 ? prior.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    if (var(i) < 0.0) {
      pred.max_clamped = std::max(pred.max_clamped, -var(i));
      var(i) = 0.0;
    }
  }
  if (pred.max_clamped > 1e-8 * prior_scale) {
    std::cerr << "mfgp: clamped negative posterior variance of magnitude "
              << pred.max_clamped << '\n';
  }
  const OutputScaler& out = model.output_scalers[static_cast<std::size_t>(level)];
  pred.mean = out.invert_mean(mean);
  pred.variance = out.invert_variance(var);
  if (full_covariance) {
    MatrixXd C = cov.eval(model.params.cov, Xs, lq, Xs, lq);
    C.noalias() -= V.transpose() * V;
    pred.covariance = C * (out.scale * out.scale);
  }
  return pred;
}

}  // namespace mfgp
