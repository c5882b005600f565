#include "mfgp/ar1.hpp"

#include "mfgp/error.hpp"

#include <cmath>

namespace mfgp {

namespace {

// Standardized regressor for level t from the raw level-(t-1) mean.
MatrixXd regressor(const TrainedGP& prev, const VectorXd& raw_mean) {
  const OutputScaler& s = prev.output_scaler;
  return ((raw_mean.array() - s.mean) / s.scale).matrix();
}

}  // namespace

VectorXd AR1Model::rhos() const {
  VectorXd r(std::max(0, num_levels() - 1));
  for (int t = 1; t < num_levels(); ++t) {
    const TrainedGP& g = level_gps[static_cast<std::size_t>(t)];
    r(t - 1) = g.params.coefs(0) * g.output_scaler.scale /
               level_gps[static_cast<std::size_t>(t - 1)].output_scaler.scale;
  }
  return r;
}

int AR1Model::num_hyperparameters() const {
  int n = 0;
  for (const auto& g : level_gps) n += g.num_hyperparameters();
  return n;
}

AR1Model ar1_fit_recursive(const MultiFidelityDataset& data,
                           const OptimizerConfig& config, bool fix_rho_zero) {
  validate(data, 2);
  require_nested(data);
  const KernelSpec spec = KernelSpec::squared_exponential(data.dim());
  AR1Model model;
  model.level_gps.push_back(fit_gp(spec, data.levels.front(), config));
  for (int t = 1; t < data.num_levels(); ++t) {
    const Dataset& level = data.levels[static_cast<std::size_t>(t)];
    const PosteriorPrediction prev = ar1_predict(model, level.X, t - 1);
    GpFitProblem problem;
    problem.covariance = make_stationary(spec);
    InputScaler in = InputScaler::identity(data.dim());
    OutputScaler out;
    if (config.standardize) {
      in = InputScaler::unit_box(level.X);
      out = OutputScaler::standardize(level.y);
    }
    problem.X = in.apply(level.X);
    problem.y = out.apply(level.y);
    problem.H = regressor(model.level_gps.back(), prev.mean);
    if (fix_rho_zero) {
      problem.fixed_coefs = VectorXd::Zero(1);
    }
    TrainedGP gp = fit_exact_gp(problem, config);
    gp.input_scaler = in;
    gp.output_scaler = out;
    model.level_gps.push_back(std::move(gp));
  }
  return model;
}

AR1Model ar1_condition_recursive(const MultiFidelityDataset& data,
                                 const KernelSpec& spec,
                                 const std::vector<GpParams>& params) {
  validate(data, 1);
  MFGP_REQUIRE(static_cast<int>(params.size()) == data.num_levels(),
               "need one parameter set per level");
  AR1Model model;
  const auto cov = make_stationary(spec);
  model.level_gps.push_back(
      condition_gp(cov, params.front(), data.levels.front().X, data.levels.front().y));
  for (int t = 1; t < data.num_levels(); ++t) {
    const Dataset& level = data.levels[static_cast<std::size_t>(t)];
    MFGP_REQUIRE(params[static_cast<std::size_t>(t)].coefs.size() == 1,
                 "levels above the first need exactly one coefficient (rho)");
    const PosteriorPrediction prev = ar1_predict(model, level.X, t - 1);
    model.level_gps.push_back(condition_gp(cov, params[static_cast<std::size_t>(t)],
                                           level.X, level.y,
                                           regressor(model.level_gps.back(), prev.mean)));
  }
  return model;
}

PosteriorPrediction ar1_predict(const AR1Model& model, const MatrixXd& X_query,
                                int level) {
  MFGP_REQUIRE(model.num_levels() >= 1, "model has no levels");
  if (level < 0) level = model.num_levels() - 1;
  MFGP_REQUIRE(level < model.num_levels(), "level out of range");
  PosteriorPrediction pred = predict_gp(model.level_gps.front(), X_query);
  for (int t = 1; t <= level; ++t) {
    const TrainedGP& prev = model.level_gps[static_cast<std::size_t>(t - 1)];
    const TrainedGP& gp = model.level_gps[static_cast<std::size_t>(t)];
    const double rho = gp.params.coefs(0);
    PosteriorPrediction next = predict_gp(gp, X_query, regressor(prev, pred.mean));
    // Var[rho h] with h the standardized previous level, in this level's units.
    const double ratio = rho * gp.output_scaler.scale / prev.output_scaler.scale;
    next.variance += ratio * ratio * pred.variance;
    next.max_clamped = std::max(next.max_clamped, pred.max_clamped);
    pred = std::move(next);
  }
  return pred;
}

CoupledAr1Covariance::CoupledAr1Covariance(KernelSpec spec) : spec_(std::move(spec)) {
  MFGP_REQUIRE(spec_.input_dim >= 1, "kernel input_dim must be >= 1");
}

namespace {

HyperParams part(const KernelSpec& spec, const VectorXd& params, int which) {
  HyperParams hp = HyperParams::defaults(spec);
  const int n = spec.num_kernel_params();
  unpack_kernel_params(spec, params.segment(which * n, n), hp);
  return hp;
}

}  // namespace

MatrixXd CoupledAr1Covariance::eval(const VectorXd& params, const MatrixXd& X,
                                    const Eigen::VectorXi& lx, const MatrixXd& X2,
                                    const Eigen::VectorXi& l2) const {
  const double r = rho(params);
  const MatrixXd k1 = kernel_eval(spec_, part(spec_, params, 0), X, X2);
  const MatrixXd k2 = kernel_eval(spec_, part(spec_, params, 1), X, X2);
  MatrixXd K(X.rows(), X2.rows());
  for (Eigen::Index j = 0; j < X2.rows(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int nh = lx(i) + l2(j);  // number of HF endpoints
      K(i, j) = (nh == 0 ? 1.0 : nh == 1 ? r : r * r) * k1(i, j) +
                (nh == 2 ? k2(i, j) : 0.0);
    }
  }
  return K;
}

VectorXd CoupledAr1Covariance::diag(const VectorXd& params, const MatrixXd& X,
                                    const Eigen::VectorXi& lx) const {
  const double r = rho(params);
  const double v1 = part(spec_, params, 0).variance();
  const double v2 = part(spec_, params, 1).variance();
  VectorXd d(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) d(i) = lx(i) == 0 ? v1 : r * r * v1 + v2;
  return d;
}

std::vector<MatrixXd> CoupledAr1Covariance::grad(const VectorXd& params,
                                                 const MatrixXd& X,
                                                 const Eigen::VectorXi& lx) const {
  const double r = rho(params);
  const auto n = X.rows();
  const HyperParams hp1 = part(spec_, params, 0);
  const HyperParams hp2 = part(spec_, params, 1);
  MatrixXd w1(n, n);  // block multiplier of k1
  MatrixXd w2(n, n);  // indicator of the HF-HF block
  MatrixXd dr(n, n);  // d multiplier / d rho
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int nh = lx(i) + lx(j);
      w1(i, j) = nh == 0 ? 1.0 : nh == 1 ? r : r * r;
      w2(i, j) = nh == 2 ? 1.0 : 0.0;
      dr(i, j) = nh == 0 ? 0.0 : nh == 1 ? 1.0 : 2.0 * r;
    }
  }
  std::vector<MatrixXd> out;
  for (const MatrixXd& g : kernel_grad_cross(spec_, hp1, X, X)) {
    out.push_back((w1.array() * g.array()).matrix());
  }
  for (const MatrixXd& g : kernel_grad_cross(spec_, hp2, X, X)) {
    out.push_back((w2.array() * g.array()).matrix());
  }
  out.push_back((dr.array() * kernel_eval(spec_, hp1, X, X).array()).matrix());
  return out;
}

VectorXd CoupledAr1Covariance::jitter_scales(const VectorXd& params, const MatrixXd& X,
                                             const Eigen::VectorXi& lx) const {
  const double v1 = part(spec_, params, 0).variance();
  const double v2 = part(spec_, params, 1).variance();
  VectorXd s(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) s(i) = lx(i) == 0 ? v1 : v2;
  return s;
}

MatrixXd CoupledAr1Covariance::jitter_scales_grad(const VectorXd& params, const MatrixXd& X,
                                                  const Eigen::VectorXi& lx,
                                                  const std::vector<MatrixXd>& /*dK*/) const {
  // Variances are the first entry of each kernel block, in log form.
  const int nk = spec_.num_kernel_params();
  const VectorXd s = jitter_scales(params, X, lx);
  MatrixXd out = MatrixXd::Zero(X.rows(), num_params());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, lx(i) == 0 ? 0 : nk) = s(i);
  return out;
}

VectorXd CoupledAr1Covariance::default_params() const {
  const StationaryCovariance st(spec_);
  const int n = spec_.num_kernel_params();
  VectorXd p(num_params());
  p.head(n) = st.default_params();
  p.segment(n, n) = st.default_params();
  p(n) = std::log(1e-2);  // small discrepancy to start
  p(2 * n) = 1.0;
  return p;
}

void CoupledAr1Covariance::param_bounds(const OptimizerConfig& config, VectorXd& lower,
                                        VectorXd& upper) const {
  const StationaryCovariance st(spec_);
  VectorXd lo;
  VectorXd hi;
  st.param_bounds(config.log_lower, config.log_upper, lo, hi);
  lower.resize(num_params());
  upper.resize(num_params());
  lower << lo, lo, -config.coef_bound;
  upper << hi, hi, config.coef_bound;
}

void CoupledAr1Covariance::init_bounds(const OptimizerConfig& config, VectorXd& lower,
                                       VectorXd& upper) const {
  const StationaryCovariance st(spec_);
  VectorXd lo;
  VectorXd hi;
  st.init_bounds(config.log_lower, config.log_upper, lo, hi);
  lower.resize(num_params());
  upper.resize(num_params());
  lower << lo, lo, std::max(-2.0, -config.coef_bound);
  upper << hi, hi, std::min(2.0, config.coef_bound);
}

double CoupledAR1Model::rho() const {
  return coupled->rho(joint.params.cov) * joint.output_scalers[1].scale /
         joint.output_scalers[0].scale;
}

CoupledAR1Model ar1_fit_coupled(const MultiFidelityDataset& data,
                                const OptimizerConfig& config) {
  validate(data, 2);
  MFGP_REQUIRE(data.num_levels() == 2, "the coupled AR1 model supports two levels");
  auto cov = std::make_shared<const CoupledAr1Covariance>(
      KernelSpec::squared_exponential(data.dim()));
  CoupledAR1Model m;
  m.coupled = cov;
  m.joint = fit_joint(cov, data, config);
  return m;
}

CoupledAR1Model ar1_condition_coupled(const MultiFidelityDataset& data,
                                      const KernelSpec& spec, const GpParams& lf,
                                      const GpParams& discrepancy) {
  validate(data, 2);
  MFGP_REQUIRE(data.num_levels() == 2, "the coupled AR1 model supports two levels");
  MFGP_REQUIRE(discrepancy.coefs.size() == 1, "discrepancy parameters need rho");
  auto cov = std::make_shared<const CoupledAr1Covariance>(spec);
  const double rho = discrepancy.coefs(0);
  JointParams jp;
  jp.cov.resize(cov->num_params());
  jp.cov << lf.kernel, discrepancy.kernel, rho;
  jp.log_noise.resize(2);
  jp.log_noise << lf.log_noise, discrepancy.log_noise;
  jp.mean.resize(2);
  jp.mean << lf.mean, rho * lf.mean + discrepancy.mean;
  CoupledAR1Model m;
  m.coupled = cov;
  m.joint = condition_joint(cov, jp, data);
  return m;
}

PosteriorPrediction ar1_predict_coupled(const CoupledAR1Model& model,
                                        const MatrixXd& X_query, int level) {
  return predict_joint(model.joint, X_query, level);
}

}  // namespace mfgp
