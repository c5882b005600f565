#include "mfgp/svgp.hpp"

#include "mfgp/error.hpp"
#include "mfgp/random.hpp"

#include <cmath>
#include <random>

namespace mfgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
/// Variances below this are not differentiated through the sampling path.
constexpr double kVarianceFloor = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  MFGP_REQUIRE(y > 0.0, "softplus_inverse needs a positive argument");
  return y + std::log(-std::expm1(-y));
}

SvgpLayer SvgpLayer::make(CovariancePtr covariance, VectorXd kernel, MatrixXd Z,
                          double q_scale) {
  MFGP_REQUIRE(covariance != nullptr, "layer needs a covariance");
  MFGP_REQUIRE(kernel.size() == covariance->num_params(), "kernel parameter count");
  MFGP_REQUIRE(Z.rows() >= 1 && Z.cols() == covariance->input_dim(),
               "inducing inputs have the wrong shape");
  MFGP_REQUIRE(q_scale > 0.0, "q_scale must be positive");
  SvgpLayer layer;
  layer.covariance = std::move(covariance);
  layer.kernel = std::move(kernel);
  layer.Z = std::move(Z);
  const auto M = layer.Z.rows();
  layer.q_mean = VectorXd::Zero(M);
  layer.q_sqrt_raw = MatrixXd::Zero(M, M);
  layer.q_sqrt_raw.diagonal().setConstant(softplus_inverse(std::sqrt(q_scale)));
  return layer;
}

MatrixXd SvgpLayer::q_sqrt() const {
  MatrixXd L = q_sqrt_raw.triangularView<Eigen::StrictlyLower>();
  for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, i) = softplus(q_sqrt_raw(i, i));
  return L;
}

void SvgpLayer::set_q_sqrt(const MatrixXd& L) {
  MFGP_REQUIRE(L.rows() == Z.rows() && L.cols() == Z.rows(), "q_sqrt shape");
  q_sqrt_raw = L.triangularView<Eigen::StrictlyLower>();
  for (Eigen::Index i = 0; i < L.rows(); ++i) q_sqrt_raw(i, i) = softplus_inverse(L(i, i));
}

int SvgpLayer::num_params() const {
  const int M = num_inducing();
  return static_cast<int>(kernel.size()) + 2 + M + M * (M + 1) / 2;
}

VectorXd SvgpLayer::pack() const {
  VectorXd p(num_params());
  const auto nk = kernel.size();
  const auto M = Z.rows();
  p.head(nk) = kernel;
  p(nk) = log_noise;
  p(nk + 1) = mean;
  p.segment(nk + 2, M) = q_mean;
  Eigen::Index k = nk + 2 + M;
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index i = j; i < M; ++i) p(k++) = q_sqrt_raw(i, j);
  }
  return p;
}

void SvgpLayer::unpack(const VectorXd& p) {
  MFGP_REQUIRE(p.size() == num_params(), "packed layer has the wrong size");
  const auto nk = kernel.size();
  const auto M = Z.rows();
  kernel = p.head(nk);
  log_noise = p(nk);
  mean = p(nk + 1);
  q_mean = p.segment(nk + 2, M);
  q_sqrt_raw.setZero(M, M);
  Eigen::Index k = nk + 2 + M;
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index i = j; i < M; ++i) q_sqrt_raw(i, j) = p(k++);
  }
}

SvgpFactors svgp_factors(const SvgpLayer& layer) {
  const Covariance& cov = *layer.covariance;
  SvgpFactors f;
  f.kzz = factor_with_jitter(cov.eval(layer.kernel, layer.Z, layer.Z),
                             cov.prior_variance(layer.kernel), layer.kernel);
  f.Lk = f.kzz.lower();
  f.Lq = layer.q_sqrt();
  return f;
}

SvgpMarginals svgp_marginals(const SvgpLayer& layer, const SvgpFactors& factors,
                             const MatrixXd& inputs) {
  MFGP_REQUIRE(inputs.cols() == layer.Z.cols(), "layer input dimension mismatch");
  const Covariance& cov = *layer.covariance;
  SvgpMarginals out;
  out.inputs = inputs;
  out.A = factors.Lk.triangularView<Eigen::Lower>().solve(
      cov.eval(layer.kernel, layer.Z, inputs));
  out.mean = (out.A.transpose() * layer.q_mean).array() + layer.mean;
  const MatrixXd B = factors.Lq.transpose() * out.A;
  out.variance = cov.diag(layer.kernel, inputs) -
                 out.A.colwise().squaredNorm().transpose() +
                 B.colwise().squaredNorm().transpose();
  return out;
}

SvgpGradient::SvgpGradient(const SvgpLayer& layer)
    : kernel(VectorXd::Zero(layer.kernel.size())),
      q_mean(VectorXd::Zero(layer.num_inducing())),
      S(MatrixXd::Zero(layer.num_inducing(), layer.num_inducing())),
      Lk(MatrixXd::Zero(layer.num_inducing(), layer.num_inducing())) {}

void svgp_backward(const SvgpLayer& layer, const SvgpFactors& factors,
                   const SvgpMarginals& marg, const VectorXd& mean_bar,
                   const VectorXd& variance_bar, SvgpGradient& acc, int input_column,
                   VectorXd* input_bar) {
  const Covariance& cov = *layer.covariance;
  const MatrixXd& A = marg.A;
  acc.mean += mean_bar.sum();
  acc.q_mean += A * mean_bar;
  const MatrixXd AV = A * variance_bar.asDiagonal();
  acc.S += AV * A.transpose();
  // (S - I) A diag(v_bar)
  const MatrixXd SmI_AV = factors.Lq * (factors.Lq.transpose() * AV) - AV;
  const MatrixXd A_bar = layer.q_mean * mean_bar.transpose() + 2.0 * SmI_AV;
  const MatrixXd Kzx_bar =
      factors.Lk.triangularView<Eigen::Lower>().transpose().solve(A_bar);
  acc.Lk.noalias() -= Kzx_bar * A.transpose();

  const auto dK = cov.grad_cross(layer.kernel, layer.Z, marg.inputs);
  const auto dD = cov.grad_diag(layer.kernel, marg.inputs);
  for (Eigen::Index j = 0; j < acc.kernel.size(); ++j) {
    const auto sj = static_cast<std::size_t>(j);
    acc.kernel(j) += dK[sj].cwiseProduct(Kzx_bar).sum() + dD[sj].dot(variance_bar);
  }
  if (input_bar != nullptr) {
    const MatrixXd G = cov.input_grad(layer.kernel, marg.inputs, layer.Z, input_column);
    *input_bar = G.cwiseProduct(Kzx_bar.transpose()).rowwise().sum();
  }
}

double svgp_kl(const SvgpLayer& layer, const SvgpFactors& factors) {
  const MatrixXd& L = factors.Lq;
  const double M = static_cast<double>(L.rows());
  return 0.5 * (L.squaredNorm() + layer.q_mean.squaredNorm() - M -
                2.0 * L.diagonal().array().log().sum());
}

VectorXd svgp_finish(const SvgpLayer& layer, const SvgpFactors& factors,
                     const SvgpGradient& acc, bool with_kl) {
  const Covariance& cov = *layer.covariance;
  const auto nk = layer.kernel.size();
  const auto M = layer.Z.rows();
  const MatrixXd& Lq = factors.Lq;
  const MatrixXd& Lk = factors.Lk;

  VectorXd m_bar = acc.q_mean;
  MatrixXd Lq_bar = (acc.S + acc.S.transpose()) * Lq;
  if (with_kl) {
    m_bar -= layer.q_mean;
    Lq_bar -= Lq;
    Lq_bar.diagonal() += Lq.diagonal().cwiseInverse();
  }
  Lq_bar = Lq_bar.triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < M; ++i) Lq_bar(i, i) *= sigmoid(layer.q_sqrt_raw(i, i));

  // Reverse mode through the Cholesky factor of K_zz + jitter.
  const MatrixXd Lk_bar = acc.Lk.triangularView<Eigen::Lower>();
  MatrixXd P = (Lk.transpose() * Lk_bar).triangularView<Eigen::Lower>();
  P.diagonal() *= 0.5;
  const auto LkT = Lk.triangularView<Eigen::Lower>().transpose();
  MatrixXd K_bar = LkT.solve(LkT.solve(P).transpose());
  K_bar = 0.5 * (K_bar + K_bar.transpose()).eval();

  VectorXd kernel_bar = acc.kernel;
  const auto dK = cov.grad(layer.kernel, layer.Z);
  const VectorXd dprior = cov.prior_variance_grad(layer.kernel);
  const double trace = K_bar.trace();
  for (Eigen::Index j = 0; j < nk; ++j) {
    kernel_bar(j) += dK[static_cast<std::size_t>(j)].cwiseProduct(K_bar).sum() +
                     factors.kzz.relative_jitter * dprior(j) * trace;
  }

  VectorXd g(layer.num_params());
  g.head(nk) = kernel_bar;
  g(nk) = acc.log_noise;
  g(nk + 1) = acc.mean;
  g.segment(nk + 2, M) = m_bar;
  Eigen::Index k = nk + 2 + M;
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index i = j; i < M; ++i) g(k++) = Lq_bar(i, j);
  }
  return g;
}

VectorXd expected_log_lik(const VectorXd& y, const VectorXd& mean,
                          const VectorXd& variance, double log_noise,
                          VectorXd* mean_bar, VectorXd* variance_bar,
                          double* log_noise_bar) {
  const double s2 = std::exp(log_noise);
  const VectorXd r2 = (y - mean).array().square().matrix() + variance;
  const VectorXd ell = ((-0.5 * (kLog2Pi + log_noise)) - r2.array() / (2.0 * s2)).matrix();
  if (mean_bar != nullptr) *mean_bar = (y - mean) / s2;
  if (variance_bar != nullptr) *variance_bar = VectorXd::Constant(y.size(), -0.5 / s2);
  if (log_noise_bar != nullptr) {
    *log_noise_bar = (-0.5 + r2.array() / (2.0 * s2)).sum();
  }
  return ell;
}

double svgp_elbo(const SvgpLayer& layer, const Dataset& batch,
                 const ElboOptions& options, VectorXd* grad) {
  MFGP_REQUIRE(options.n_mc >= 1, "n_mc must be >= 1");
  MFGP_REQUIRE(batch.X.rows() == batch.y.size(), "batch shape mismatch");
  const SvgpFactors factors = svgp_factors(layer);
  const SvgpMarginals marg = svgp_marginals(layer, factors, batch.X);
  const auto N = batch.y.size();

  double data_term = 0.0;
  VectorXd mean_bar;
  VectorXd var_bar;
  double noise_bar = 0.0;
  if (options.analytic) {
    data_term = expected_log_lik(batch.y, marg.mean, marg.variance, layer.log_noise,
                                 &mean_bar, &var_bar, &noise_bar)
                    .sum();
  } else {
    Rng rng(options.seed);
    std::normal_distribution<double> normal;
    const double s2 = std::exp(layer.log_noise);
    mean_bar = VectorXd::Zero(N);
    var_bar = VectorXd::Zero(N);
    const double w = 1.0 / options.n_mc;
    for (int s = 0; s < options.n_mc; ++s) {
      for (Eigen::Index i = 0; i < N; ++i) {
        const double v = marg.variance(i);
        const double sd = std::sqrt(std::max(v, kVarianceFloor));
        const double eps = normal(rng);
        const double r = batch.y(i) - (marg.mean(i) + sd * eps);
        data_term += w * (-0.5 * (kLog2Pi + layer.log_noise) - r * r / (2.0 * s2));
        const double f_bar = r / s2;
        mean_bar(i) += w * f_bar;
        if (v > kVarianceFloor) var_bar(i) += w * f_bar * eps / (2.0 * sd);
        noise_bar += w * (-0.5 + r * r / (2.0 * s2));
      }
    }
  }
  const double value = data_term - svgp_kl(layer, factors);
  if (grad != nullptr) {
    SvgpGradient acc(layer);
    acc.log_noise = noise_bar;
    svgp_backward(layer, factors, marg, mean_bar, var_bar, acc);
    *grad = svgp_finish(layer, factors, acc, true);
  }
  return value;
}

PosteriorPrediction svgp_predict(const SvgpLayer& layer, const MatrixXd& X_query) {
  const SvgpMarginals marg = svgp_marginals(layer, svgp_factors(layer), X_query);
  PosteriorPrediction out;
  out.mean = marg.mean;
  out.variance = marg.variance.cwiseMax(0.0);
  const double neg = -marg.variance.minCoeff();
  out.max_clamped = std::max(neg, 0.0);
  return out;
}

void titsias_optimal(SvgpLayer& layer, const Dataset& data) {
  const SvgpFactors factors = svgp_factors(layer);
  const SvgpMarginals marg = svgp_marginals(layer, factors, data.X);
  const auto M = layer.Z.rows();
  const double s2 = layer.noise();
  MatrixXd prec = marg.A * marg.A.transpose() / s2;
  prec.diagonal().array() += 1.0;
  const Eigen::LLT<MatrixXd> llt(prec);
  const MatrixXd Sigma = llt.solve(MatrixXd::Identity(M, M));
  layer.q_mean = Sigma * (marg.A * (data.y.array() - layer.mean).matrix()) / s2;
  const Eigen::LLT<MatrixXd> sq(0.5 * (Sigma + Sigma.transpose()));
  layer.set_q_sqrt(sq.matrixL());
}

}  // namespace mfgp
