#include "mfgp/kernels.hpp"

#include "mfgp/error.hpp"

#include <cmath>
#include <string>

namespace mfgp {

namespace {

using Eigen::ArrayXXd;

double exponent_of(const KernelSpec& spec, const HyperParams& hp, int k) {
  return spec.family == KernelFamily::SquaredExponential ? 2.0 : hp.exponents(k);
}

// |X_ik - X2_jk| for a single column k.
ArrayXXd abs_diff(const MatrixXd& X, const MatrixXd& X2, int k) {
  return (X.col(k).replicate(1, X2.rows()) -
          X2.col(k).transpose().replicate(X.rows(), 1))
      .array()
      .abs();
}

ArrayXXd powered(const ArrayXXd& a, double p) {
  if (p == 2.0) {
    return a.square();
  }
  return a.pow(p);
}

// Per-dimension terms theta_k |dx_k|^p_k; their sum is the exponent argument.
std::vector<ArrayXXd> dimension_terms(const KernelSpec& spec,
                                      const HyperParams& hp, const MatrixXd& X,
                                      const MatrixXd& X2) {
  std::vector<ArrayXXd> terms;
  terms.reserve(spec.input_dim);
  for (int k = 0; k < spec.input_dim; ++k) {
    terms.push_back(hp.inv_lengthscale(k) *
                    powered(abs_diff(X, X2, k), exponent_of(spec, hp, k)));
  }
  return terms;
}

void check_inputs(const KernelSpec& spec, const MatrixXd& X, const MatrixXd& X2) {
  if (X.cols() != spec.input_dim || X2.cols() != spec.input_dim) {
    throw ContractViolation("kernel input has " + std::to_string(X.cols()) +
                            "/" + std::to_string(X2.cols()) +
                            " columns, expected " +
                            std::to_string(spec.input_dim));
  }
}

}  // namespace

KernelSpec KernelSpec::squared_exponential(int input_dim, bool ard) {
  KernelSpec spec;
  spec.family = KernelFamily::SquaredExponential;
  spec.input_dim = input_dim;
  spec.ard = ard;
  return spec;
}

KernelSpec KernelSpec::p_exponential(int input_dim, bool ard,
                                     bool optimize_exponents) {
  KernelSpec spec;
  spec.family = KernelFamily::PExponential;
  spec.input_dim = input_dim;
  spec.ard = ard;
  spec.optimize_exponents = optimize_exponents;
  return spec;
}

int KernelSpec::num_kernel_params() const {
  return 1 + num_lengthscales() + (exponents_free() ? input_dim : 0);
}

HyperParams HyperParams::defaults(const KernelSpec& spec) {
  HyperParams hp;
  hp.log_variance = 0.0;
  hp.log_inv_lengthscales = VectorXd::Zero(spec.num_lengthscales());
  hp.exponents = VectorXd::Constant(spec.input_dim, 2.0);
  hp.log_noise = std::log(1e-6);
  hp.mean_const = 0.0;
  return hp;
}

double HyperParams::variance() const { return std::exp(log_variance); }

double HyperParams::noise() const {
  return std::exp(std::max(log_noise, std::log(kNoiseFloor)));
}

double HyperParams::inv_lengthscale(int dim) const {
  const auto n = log_inv_lengthscales.size();
  return std::exp(log_inv_lengthscales(n == 1 ? 0 : dim));
}

void validate(const KernelSpec& spec, const HyperParams& hp) {
  MFGP_REQUIRE(spec.input_dim >= 1, "kernel input_dim must be >= 1");
  MFGP_REQUIRE(hp.log_inv_lengthscales.size() == spec.num_lengthscales(),
               "log_inv_lengthscales has the wrong length for this KernelSpec");
  if (spec.family == KernelFamily::PExponential) {
    MFGP_REQUIRE(hp.exponents.size() == spec.input_dim,
                 "exponents must have one entry per input dimension");
    for (int k = 0; k < spec.input_dim; ++k) {
      MFGP_REQUIRE(hp.exponents(k) > 0.0 && hp.exponents(k) <= 2.0,
                   "p-exponential exponents must lie in (0, 2]");
    }
  }
}

MatrixXd kernel_eval(const KernelSpec& spec, const HyperParams& hp,
                     const MatrixXd& X, const MatrixXd& X2) {
  check_inputs(spec, X, X2);
  ArrayXXd arg = ArrayXXd::Zero(X.rows(), X2.rows());
  for (int k = 0; k < spec.input_dim; ++k) {
    arg += hp.inv_lengthscale(k) *
           powered(abs_diff(X, X2, k), exponent_of(spec, hp, k));
  }
  return (hp.variance() * (-arg).exp()).matrix();
}

VectorXd kernel_diag(const KernelSpec& spec, const HyperParams& hp,
                     const MatrixXd& X) {
  MFGP_REQUIRE(X.cols() == spec.input_dim, "kernel input dimension mismatch");
  return VectorXd::Constant(X.rows(), hp.variance());
}

std::vector<MatrixXd> kernel_grad_cross(const KernelSpec& spec,
                                        const HyperParams& hp,
                                        const MatrixXd& X, const MatrixXd& X2) {
  check_inputs(spec, X, X2);
  const auto terms = dimension_terms(spec, hp, X, X2);
  ArrayXXd arg = ArrayXXd::Zero(X.rows(), X2.rows());
  for (const auto& t : terms) {
    arg += t;
  }
  const ArrayXXd K = hp.variance() * (-arg).exp();

  std::vector<MatrixXd> grads;
  grads.reserve(spec.num_kernel_params());
  grads.push_back(K.matrix());
  if (spec.ard) {
    for (int k = 0; k < spec.input_dim; ++k) {
      grads.push_back((-K * terms[k]).matrix());
    }
  } else {
    grads.push_back((-K * arg).matrix());
  }
  if (spec.exponents_free()) {
    for (int k = 0; k < spec.input_dim; ++k) {
      const ArrayXXd d = abs_diff(X, X2, k);
      const ArrayXXd logd = (d > 0.0).select(d.max(1e-300).log(), 0.0);
      grads.push_back((-K * terms[k] * logd).matrix());
    }
  }
  return grads;
}

std::vector<MatrixXd> kernel_grad(const KernelSpec& spec, const HyperParams& hp,
                                  const MatrixXd& X) {
  auto grads = kernel_grad_cross(spec, hp, X, X);
  grads.push_back(hp.noise() * MatrixXd::Identity(X.rows(), X.rows()));
  return grads;
}

MatrixXd kernel_input_grad(const KernelSpec& spec, const HyperParams& hp,
                           const MatrixXd& X, const MatrixXd& X2, int column) {
  check_inputs(spec, X, X2);
  MFGP_REQUIRE(column >= 0 && column < spec.input_dim, "column out of range");
  const ArrayXXd K = kernel_eval(spec, hp, X, X2).array();
  const ArrayXXd diff = (X.col(column).replicate(1, X2.rows()) -
                         X2.col(column).transpose().replicate(X.rows(), 1))
                            .array();
  const double theta = hp.inv_lengthscale(column);
  const double p = exponent_of(spec, hp, column);
  if (p == 2.0) {
    return (-2.0 * theta * diff * K).matrix();
  }
  const ArrayXXd mag = diff.abs();
  const ArrayXXd slope =
      (mag > 0.0).select(p * mag.max(1e-300).pow(p - 1.0) * diff.sign(), 0.0);
  return (-theta * slope * K).matrix();
}

VectorXd pack_kernel_params(const KernelSpec& spec, const HyperParams& hp) {
  VectorXd packed(spec.num_kernel_params());
  int i = 0;
  packed(i++) = hp.log_variance;
  for (int k = 0; k < spec.num_lengthscales(); ++k) {
    packed(i++) = hp.log_inv_lengthscales(k);
  }
  if (spec.exponents_free()) {
    for (int k = 0; k < spec.input_dim; ++k) {
      packed(i++) = hp.exponents(k);
    }
  }
  return packed;
}

void unpack_kernel_params(const KernelSpec& spec, const VectorXd& packed,
                          HyperParams& hp) {
  MFGP_REQUIRE(packed.size() == spec.num_kernel_params(),
               "packed kernel parameter vector has the wrong length");
  int i = 0;
  hp.log_variance = packed(i++);
  hp.log_inv_lengthscales.resize(spec.num_lengthscales());
  for (int k = 0; k < spec.num_lengthscales(); ++k) {
    hp.log_inv_lengthscales(k) = packed(i++);
  }
  if (hp.exponents.size() != spec.input_dim) {
    hp.exponents = VectorXd::Constant(spec.input_dim, 2.0);
  }
  if (spec.exponents_free()) {
    for (int k = 0; k < spec.input_dim; ++k) {
      hp.exponents(k) = packed(i++);
    }
  }
}

}  // namespace mfgp
