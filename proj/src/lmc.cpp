#include "mfgp/lmc.hpp"

#include "mfgp/error.hpp"

#include <cmath>

namespace mfgp {

LmcCovariance::LmcCovariance(int input_dim, int num_levels, LmcConfig config)
    : d_(input_dim), s_(num_levels), config_(std::move(config)) {
  MFGP_REQUIRE(d_ >= 1, "LMC input dimension must be >= 1");
  MFGP_REQUIRE(s_ >= 1, "LMC needs at least one level");
  MFGP_REQUIRE(config_.num_groups >= 1, "LMC needs R >= 1");
  MFGP_REQUIRE(static_cast<int>(config_.ranks.size()) == config_.num_groups,
               "LMC needs one rank per group");
  for (int c : config_.ranks) {
    MFGP_REQUIRE(c >= 1, "LMC ranks must be >= 1");
  }
}

KernelSpec LmcCovariance::spec() const {
  return KernelSpec::squared_exponential(d_, config_.ard);
}

int LmcCovariance::group_size(int group) const {
  return s_ * config_.ranks[static_cast<std::size_t>(group)] + spec().num_lengthscales();
}

int LmcCovariance::offset(int group) const {
  int off = 0;
  for (int r = 0; r < group; ++r) off += group_size(r);
  return off;
}

int LmcCovariance::num_params() const { return offset(config_.num_groups); }

MatrixXd LmcCovariance::mixing(const VectorXd& params, int group) const {
  const int c = config_.ranks[static_cast<std::size_t>(group)];
  MatrixXd A(s_, c);
  const int off = offset(group);
  for (int i = 0; i < s_; ++i) {
    for (int j = 0; j < c; ++j) A(i, j) = params(off + i * c + j);
  }
  return A;
}

MatrixXd LmcCovariance::coregionalization(const VectorXd& params, int group) const {
  const MatrixXd A = mixing(params, group);
  return A * A.transpose();
}

VectorXd LmcCovariance::log_inv_lengthscales(const VectorXd& params, int group) const {
  const int c = config_.ranks[static_cast<std::size_t>(group)];
  return params.segment(offset(group) + s_ * c, spec().num_lengthscales());
}

VectorXd LmcCovariance::pack(const std::vector<MatrixXd>& mixing_mats,
                             const std::vector<VectorXd>& lengthscales) const {
  MFGP_REQUIRE(static_cast<int>(mixing_mats.size()) == config_.num_groups &&
                   static_cast<int>(lengthscales.size()) == config_.num_groups,
               "need one mixing matrix and lengthscale vector per group");
  VectorXd p(num_params());
  for (int r = 0; r < config_.num_groups; ++r) {
    const int c = config_.ranks[static_cast<std::size_t>(r)];
    const MatrixXd& A = mixing_mats[static_cast<std::size_t>(r)];
    MFGP_REQUIRE(A.rows() == s_ && A.cols() == c, "mixing matrix has the wrong shape");
    MFGP_REQUIRE(lengthscales[static_cast<std::size_t>(r)].size() == spec().num_lengthscales(),
                 "lengthscale vector has the wrong size");
    const int off = offset(r);
    for (int i = 0; i < s_; ++i) {
      for (int j = 0; j < c; ++j) p(off + i * c + j) = A(i, j);
    }
    p.segment(off + s_ * c, spec().num_lengthscales()) = lengthscales[static_cast<std::size_t>(r)];
  }
  return p;
}

namespace {

HyperParams unit_hp(const KernelSpec& spec, const VectorXd& log_inv_ls) {
  HyperParams hp = HyperParams::defaults(spec);
  hp.log_variance = 0.0;
  hp.log_inv_lengthscales = log_inv_ls;
  return hp;
}

}  // namespace

MatrixXd LmcCovariance::eval(const VectorXd& params, const MatrixXd& X,
                             const Eigen::VectorXi& lx, const MatrixXd& X2,
                             const Eigen::VectorXi& l2) const {
  const KernelSpec sp = spec();
  MatrixXd K = MatrixXd::Zero(X.rows(), X2.rows());
  for (int r = 0; r < config_.num_groups; ++r) {
    const MatrixXd B = coregionalization(params, r);
    const MatrixXd k = kernel_eval(sp, unit_hp(sp, log_inv_lengthscales(params, r)), X, X2);
    for (Eigen::Index j = 0; j < X2.rows(); ++j) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        K(i, j) += B(lx(i), l2(j)) * k(i, j);
      }
    }
  }
  return K;
}

VectorXd LmcCovariance::diag(const VectorXd& params, const MatrixXd& X,
                             const Eigen::VectorXi& lx) const {
  VectorXd v = VectorXd::Zero(X.rows());
  for (int r = 0; r < config_.num_groups; ++r) {
    const MatrixXd B = coregionalization(params, r);
    for (Eigen::Index i = 0; i < X.rows(); ++i) v(i) += B(lx(i), lx(i));
  }
  return v;
}

std::vector<MatrixXd> LmcCovariance::grad(const VectorXd& params, const MatrixXd& X,
                                          const Eigen::VectorXi& lx) const {
  const KernelSpec sp = spec();
  const auto n = X.rows();
  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(num_params()));
  for (int r = 0; r < config_.num_groups; ++r) {
    const int c = config_.ranks[static_cast<std::size_t>(r)];
    const MatrixXd A = mixing(params, r);
    const MatrixXd B = A * A.transpose();
    const HyperParams hp = unit_hp(sp, log_inv_lengthscales(params, r));
    const MatrixXd k = kernel_eval(sp, hp, X, X);
    for (int a = 0; a < s_; ++a) {
      for (int cc = 0; cc < c; ++cc) {
        // dB[p][q]/dA[a][cc] = [p == a] A[q][cc] + A[p][cc] [q == a]
        MatrixXd dB = MatrixXd::Zero(s_, s_);
        dB.row(a) += A.col(cc).transpose();
        dB.col(a) += A.col(cc);
        MatrixXd dK(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
          for (Eigen::Index i = 0; i < n; ++i) dK(i, j) = dB(lx(i), lx(j)) * k(i, j);
        }
        out.push_back(std::move(dK));
      }
    }
    const auto dk = kernel_grad_cross(sp, hp, X, X);
    for (std::size_t t = 1; t < dk.size(); ++t) {
      MatrixXd dK(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) dK(i, j) = B(lx(i), lx(j)) * dk[t](i, j);
      }
      out.push_back(std::move(dK));
    }
  }
  return out;
}

VectorXd LmcCovariance::default_params() const {
  std::vector<MatrixXd> A;
  std::vector<VectorXd> ls;
  const int R = config_.num_groups;
  for (int r = 0; r < R; ++r) {
    const int c = config_.ranks[static_cast<std::size_t>(r)];
    // Group 0 starts shared across levels; later groups start small and
    // level-specific, with shorter lengthscales, so restarts are not symmetric.
    MatrixXd a(s_, c);
    for (int i = 0; i < s_; ++i) {
      for (int j = 0; j < c; ++j) {
        a(i, j) = r == 0 ? 0.9 / std::sqrt(static_cast<double>(c))
                         : 0.3 * ((i + j) % 2 == 0 ? 1.0 : -1.0);
      }
    }
    A.push_back(a);
    ls.push_back(VectorXd::Constant(spec().num_lengthscales(), std::log(5.0) + r));
  }
  return pack(A, ls);
}

void LmcCovariance::param_bounds(const OptimizerConfig& config, VectorXd& lower,
                                 VectorXd& upper) const {
  lower.resize(num_params());
  upper.resize(num_params());
  for (int r = 0; r < config_.num_groups; ++r) {
    const int off = offset(r);
    const int na = s_ * config_.ranks[static_cast<std::size_t>(r)];
    lower.segment(off, na).setConstant(-config.coef_bound);
    upper.segment(off, na).setConstant(config.coef_bound);
    lower.segment(off + na, spec().num_lengthscales()).setConstant(config.log_lower);
    upper.segment(off + na, spec().num_lengthscales()).setConstant(config.log_upper);
  }
}

void LmcCovariance::init_bounds(const OptimizerConfig& config, VectorXd& lower,
                                VectorXd& upper) const {
  param_bounds(config, lower, upper);
  for (int r = 0; r < config_.num_groups; ++r) {
    const int na = s_ * config_.ranks[static_cast<std::size_t>(r)];
    lower.segment(offset(r), na).setConstant(-1.5);
    upper.segment(offset(r), na).setConstant(1.5);
  }
}

double LmcModel::correlation(int a, int b) const {
  MatrixXd B = MatrixXd::Zero(lmc->num_levels(), lmc->num_levels());
  for (int r = 0; r < lmc->config().num_groups; ++r) B += coregionalization(r);
  return B(a, b) / std::sqrt(B(a, a) * B(b, b));
}

LmcModel lmc_fit(const MultiFidelityDataset& data, const LmcConfig& lmc_config,
                 const OptimizerConfig& config) {
  validate(data, 2);
  auto cov = std::make_shared<const LmcCovariance>(data.dim(), data.num_levels(), lmc_config);
  LmcModel m;
  m.lmc = cov;
  m.joint = fit_joint(cov, data, config);
  return m;
}

LmcModel lmc_condition(const MultiFidelityDataset& data, const LmcConfig& lmc_config,
                       const JointParams& params) {
  validate(data, 1);
  auto cov = std::make_shared<const LmcCovariance>(data.dim(), data.num_levels(), lmc_config);
  LmcModel m;
  m.lmc = cov;
  m.joint = condition_joint(cov, params, data);
  return m;
}

PosteriorPrediction lmc_predict(const LmcModel& model, const MatrixXd& X_query,
                                int target_level, bool full_covariance) {
  return predict_joint(model.joint, X_query, target_level, full_covariance);
}

}  // namespace mfgp
