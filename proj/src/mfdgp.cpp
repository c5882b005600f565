#include "mfgp/mfdgp.hpp"

#include "mfgp/error.hpp"
#include "mfgp/nargp.hpp"
#include "mfgp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace mfgp {

namespace {

constexpr double kVarianceFloor = 1e-12;

MatrixXd strided_rows(const MatrixXd& X, int cap) {
  const auto n = X.rows();
  if (n <= cap) return X;
  MatrixXd out(cap, X.cols());
  for (int k = 0; k < cap; ++k) {
    out.row(k) = X.row(static_cast<Eigen::Index>(
        (static_cast<long long>(k) * n) / cap));
  }
  return out;
}

MatrixXd augment(const MatrixXd& X, const VectorXd& f) {
  MatrixXd A(X.rows(), X.cols() + 1);
  A << X, f;
  return A;
}

/// Value of the previous level at each row of X: the observation when the row
/// is one of its inputs, otherwise the mean of a GP fitted to that level.
VectorXd previous_level_values(const Dataset& prev, const MatrixXd& X,
                               std::uint64_t seed) {
  VectorXd out(X.rows());
  std::vector<Eigen::Index> missing;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Index hit = -1;
    for (Eigen::Index j = 0; j < prev.X.rows() && hit < 0; ++j) {
      if ((prev.X.row(j) - X.row(i)).cwiseAbs().maxCoeff() <= 1e-12) hit = j;
    }
    if (hit >= 0) {
      out(i) = prev.y(hit);
    } else {
      missing.push_back(i);
    }
  }
  if (!missing.empty()) {
    OptimizerConfig cfg;
    cfg.seed = seed;
    const TrainedGP gp = fit_gp(KernelSpec::squared_exponential(prev.dim()), prev, cfg);
    MatrixXd Xm(static_cast<Eigen::Index>(missing.size()), X.cols());
    for (std::size_t k = 0; k < missing.size(); ++k) {
      Xm.row(static_cast<Eigen::Index>(k)) = X.row(missing[k]);
    }
    const VectorXd m = predict_gp(gp, Xm).mean;
    for (std::size_t k = 0; k < missing.size(); ++k) {
      out(missing[k]) = m(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

void sample_into(const SvgpMarginals& marg, Rng& rng, std::normal_distribution<double>& normal,
                 VectorXd& f, VectorXd& eps, VectorXd& sd) {
  const auto n = marg.mean.size();
  f.resize(n);
  eps.resize(n);
  sd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eps(i) = normal(rng);
    sd(i) = std::sqrt(std::max(marg.variance(i), kVarianceFloor));
    f(i) = marg.mean(i) + sd(i) * eps(i);
  }
}

VectorXd variance_bar_from_sample(const SvgpMarginals& marg, const VectorXd& f_bar,
                                  const VectorXd& eps, const VectorXd& sd) {
  VectorXd vb(f_bar.size());
  for (Eigen::Index i = 0; i < f_bar.size(); ++i) {
    vb(i) = marg.variance(i) > kVarianceFloor ? f_bar(i) * eps(i) / (2.0 * sd(i)) : 0.0;
  }
  return vb;
}

}  // namespace

int MFDGPModel::num_hyperparameters() const {
  int n = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    // Layers above the first have a fixed zero mean.
    n += layers[l].num_params() - (l > 0 ? 1 : 0);
  }
  return n;
}

MFDGPModel mfdgp_init(const MultiFidelityDataset& data, const MfdgpConfig& config) {
  validate(data, 1);
  MFGP_REQUIRE(config.max_inducing >= 1, "max_inducing must be >= 1");
  MFGP_REQUIRE(config.init_noise > 0.0 && config.init_q_scale > 0.0,
               "initial noise and q scale must be positive");
  const int d = data.dim();
  const int s = data.num_levels();
  MFDGPModel model;
  model.input_scaler = InputScaler::unit_box(data.stacked_inputs());
  for (int l = 0; l < s; ++l) {
    const Dataset& raw = data.levels[static_cast<std::size_t>(l)];
    const OutputScaler out = OutputScaler::standardize(raw.y);
    model.output_scalers.push_back(out);
    model.train.push_back(Dataset{model.input_scaler.apply(raw.X), out.apply(raw.y)});
  }

  const auto se = make_stationary(KernelSpec::squared_exponential(d));
  SvgpLayer first = SvgpLayer::make(se, se->default_params(),
                                    strided_rows(model.train[0].X, config.max_inducing),
                                    config.init_q_scale);
  first.log_noise = std::log(config.init_noise);
  model.layers.push_back(std::move(first));

  const auto composite = std::make_shared<CompositeCovariance>(d);
  for (int l = 1; l < s; ++l) {
    const Dataset& cur = model.train[static_cast<std::size_t>(l)];
    const VectorXd f = previous_level_values(model.train[static_cast<std::size_t>(l - 1)],
                                             cur.X, derive_seed(config.seed, 1000 + l));
    SvgpLayer layer = SvgpLayer::make(composite, composite->default_params(),
                                      strided_rows(augment(cur.X, f), config.max_inducing),
                                      config.init_q_scale);
    layer.log_noise = std::log(config.init_noise);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

VectorXd mfdgp_pack(const MFDGPModel& model) {
  int n = 0;
  for (const auto& l : model.layers) n += l.num_params();
  VectorXd p(n);
  Eigen::Index k = 0;
  for (const auto& l : model.layers) {
    p.segment(k, l.num_params()) = l.pack();
    k += l.num_params();
  }
  return p;
}

void mfdgp_unpack(MFDGPModel& model, const VectorXd& packed) {
  Eigen::Index k = 0;
  for (auto& l : model.layers) {
    MFGP_REQUIRE(k + l.num_params() <= packed.size(), "packed model is too short");
    l.unpack(packed.segment(k, l.num_params()));
    k += l.num_params();
  }
  MFGP_REQUIRE(k == packed.size(), "packed model is too long");
}

double mfdgp_elbo(const MFDGPModel& model, const ElboOptions& options, VectorXd* grad,
                  int minibatch) {
  MFGP_REQUIRE(options.n_mc >= 1, "n_mc must be >= 1");
  const int s = model.num_levels();
  MFGP_REQUIRE(s >= 1 && static_cast<int>(model.train.size()) == s,
               "model has no training data");
  const int d = static_cast<int>(model.train[0].X.cols());

  std::vector<SvgpFactors> factors;
  std::vector<SvgpGradient> acc;
  for (const auto& layer : model.layers) {
    factors.push_back(svgp_factors(layer));
    acc.emplace_back(layer);
  }
  Rng rng(options.seed);
  std::normal_distribution<double> normal;

  double total = 0.0;
  for (int t = 0; t < s; ++t) {
    const Dataset& full = model.train[static_cast<std::size_t>(t)];
    const auto N = full.y.size();
    MatrixXd X = full.X;
    VectorXd y = full.y;
    double scale = 1.0;
    if (minibatch > 0 && minibatch < N) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      X.resize(minibatch, full.X.cols());
      y.resize(minibatch);
      for (int b = 0; b < minibatch; ++b) {
        X.row(b) = full.X.row(idx[static_cast<std::size_t>(b)]);
        y(b) = full.y(idx[static_cast<std::size_t>(b)]);
      }
      scale = static_cast<double>(N) / minibatch;
    }

    const SvgpMarginals m0 = svgp_marginals(model.layers[0], factors[0], X);
    if (t == 0) {
      VectorXd mb;
      VectorXd vb;
      double nb = 0.0;
      total += scale * expected_log_lik(y, m0.mean, m0.variance, model.layers[0].log_noise,
                                        &mb, &vb, &nb)
                           .sum();
      acc[0].log_noise += scale * nb;
      svgp_backward(model.layers[0], factors[0], m0, scale * mb, scale * vb, acc[0]);
      continue;
    }

    const double w = scale / options.n_mc;
    const auto st = static_cast<std::size_t>(t);
    VectorXd mu0_bar = VectorXd::Zero(X.rows());
    VectorXd v0_bar = VectorXd::Zero(X.rows());
    std::vector<SvgpMarginals> margs(st + 1);
    std::vector<VectorXd> eps(st);
    std::vector<VectorXd> sd(st);
    for (int smp = 0; smp < options.n_mc; ++smp) {
      VectorXd f;
      sample_into(m0, rng, normal, f, eps[0], sd[0]);
      for (std::size_t k = 1; k <= st; ++k) {
        margs[k] = svgp_marginals(model.layers[k], factors[k], augment(X, f));
        if (k < st) sample_into(margs[k], rng, normal, f, eps[k], sd[k]);
      }
      VectorXd mb;
      VectorXd vb;
      double nb = 0.0;
      total += w * expected_log_lik(y, margs[st].mean, margs[st].variance,
                                    model.layers[st].log_noise, &mb, &vb, &nb)
                       .sum();
      acc[st].log_noise += w * nb;
      VectorXd f_bar;
      svgp_backward(model.layers[st], factors[st], margs[st], w * mb, w * vb, acc[st], d,
                    &f_bar);
      for (std::size_t k = st - 1; k >= 1; --k) {
        const VectorXd vbk = variance_bar_from_sample(margs[k], f_bar, eps[k], sd[k]);
        VectorXd next;
        svgp_backward(model.layers[k], factors[k], margs[k], f_bar, vbk, acc[k], d, &next);
        f_bar = next;
      }
      mu0_bar += f_bar;
      v0_bar += variance_bar_from_sample(m0, f_bar, eps[0], sd[0]);
    }
    svgp_backward(model.layers[0], factors[0], m0, mu0_bar, v0_bar, acc[0]);
  }

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    total -= svgp_kl(model.layers[l], factors[l]);
  }
  if (grad != nullptr) {
    std::vector<VectorXd> parts;
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      parts.push_back(svgp_finish(model.layers[l], factors[l], acc[l], true));
      n += parts.back().size();
    }
    grad->resize(n);
    Eigen::Index k = 0;
    for (const auto& p : parts) {
      grad->segment(k, p.size()) = p;
      k += p.size();
    }
  }
  return total;
}

MFDGPModel mfdgp_fit(const MultiFidelityDataset& data, const MfdgpConfig& config) {
  validate(data, 2);
  MFGP_REQUIRE(config.iterations >= 1 && config.n_mc >= 1,
               "iterations and n_mc must be >= 1");
  MFGP_REQUIRE(config.learning_rate > 0.0, "learning_rate must be positive");
  MFGP_REQUIRE(config.noise_floor > 0.0 && config.noise_ceiling > config.noise_floor,
               "noise bounds are inconsistent");
  MFDGPModel model = mfdgp_init(data, config);

  const double inf = std::numeric_limits<double>::infinity();
  VectorXd x = mfdgp_pack(model);
  VectorXd lower = VectorXd::Constant(x.size(), -inf);
  VectorXd upper = VectorXd::Constant(x.size(), inf);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const SvgpLayer& layer = model.layers[l];
    const auto nk = layer.kernel.size();
    VectorXd lo;
    VectorXd hi;
    layer.covariance->param_bounds(config.log_lower, config.log_upper, lo, hi);
    lower.segment(k, nk) = lo;
    upper.segment(k, nk) = hi;
    lower(k + nk) = std::log(config.noise_floor);
    upper(k + nk) = std::log(config.noise_ceiling);
    if (l > 0) {
      lower(k + nk + 1) = 0.0;
      upper(k + nk + 1) = 0.0;
    }
    k += layer.num_params();
  }
  x = x.cwiseMax(lower).cwiseMin(upper);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  VectorXd m1 = VectorXd::Zero(x.size());
  VectorXd m2 = VectorXd::Zero(x.size());
  model.elbo_trace.reserve(static_cast<std::size_t>(config.iterations));
  VectorXd g;
  for (int it = 0; it < config.iterations; ++it) {
    double lr = config.learning_rate;
    for (double frac : config.decay_at) {
      if (it >= frac * config.iterations) lr *= config.decay_factor;
    }
    mfdgp_unpack(model, x);
    double elbo = std::numeric_limits<double>::quiet_NaN();
    std::string cause;
    try {
      elbo = mfdgp_elbo(model, {config.n_mc, false, derive_seed(config.seed, it)}, &g,
                        config.minibatch);
    } catch (const NumericalFailure& e) {
      cause = e.what();
    }
    if (!std::isfinite(elbo) || !g.allFinite()) {
      std::ostringstream dump;
      dump << "iteration " << it << " parameters [" << x.transpose() << "]";
      std::vector<std::string> diag{dump.str()};
      if (!cause.empty()) diag.push_back(cause);
      throw TrainingFailure("MF-DGP ELBO diverged at iteration " + std::to_string(it),
                            diag);
    }
    model.elbo_trace.push_back(elbo);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (lower(j) == upper(j)) g(j) = 0.0;
    }
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * g;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(kBeta1, it + 1);
    const double c2 = 1.0 - std::pow(kBeta2, it + 1);
    x.array() += lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
    x = x.cwiseMax(lower).cwiseMin(upper);
  }
  mfdgp_unpack(model, x);
  return model;
}

PosteriorPrediction mfdgp_predict(const MFDGPModel& model, const MatrixXd& X_query,
                                  const MfdgpPredictOptions& options) {
  MFGP_REQUIRE(options.n_samples >= 2, "n_samples must be >= 2");
  MFGP_REQUIRE(model.num_levels() >= 1, "model has no layers");
  const int target = options.level < 0 ? model.num_levels() - 1 : options.level;
  MFGP_REQUIRE(target < model.num_levels(), "level out of range");
  MFGP_REQUIRE(X_query.cols() == model.input_scaler.offset.size(),
               "query dimension differs from training dimension");
  const MatrixXd Xs = model.input_scaler.apply(X_query);
  std::vector<SvgpFactors> factors;
  for (int l = 0; l <= target; ++l) {
    factors.push_back(svgp_factors(model.layers[static_cast<std::size_t>(l)]));
  }
  const SvgpMarginals base = svgp_marginals(model.layers[0], factors[0], Xs);

  PosteriorPrediction out;
  const auto n = Xs.rows();
  if (target == 0) {
    out.mean = base.mean;
    out.variance = base.variance.cwiseMax(0.0);
    out.max_clamped = std::max(0.0, -base.variance.minCoeff());
  } else {
    const int S = options.n_samples;
    out.mean.resize(n);
    out.variance.resize(n);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < n; ++i) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
      const MatrixXd Xi = Xs.row(i).replicate(S, 1);
      VectorXd mu = VectorXd::Constant(S, base.mean(i));
      VectorXd var = VectorXd::Constant(S, std::max(base.variance(i), 0.0));
      for (int k = 1; k <= target; ++k) {
        VectorXd f(S);
        for (int j = 0; j < S; ++j) f(j) = mu(j) + std::sqrt(var(j)) * normal(rng);
        const SvgpMarginals m = svgp_marginals(model.layers[static_cast<std::size_t>(k)],
                                               factors[static_cast<std::size_t>(k)],
                                               augment(Xi, f));
        mu = m.mean;
        out.max_clamped = std::max(out.max_clamped, -m.variance.minCoeff());
        var = m.variance.cwiseMax(0.0);
      }
      const double mean = mu.mean();
      out.mean(i) = mean;
      out.variance(i) = var.mean() + (mu.array() - mean).square().mean();
    }
  }
  const OutputScaler& sc = model.output_scalers[static_cast<std::size_t>(target)];
  out.mean = sc.invert_mean(out.mean);
  out.variance = sc.invert_variance(out.variance);
  out.max_clamped *= sc.scale * sc.scale;
  return out;
}

double mfdgp_noise(const MFDGPModel& model, int level) {
  const int t = level < 0 ? model.num_levels() - 1 : level;
  MFGP_REQUIRE(t >= 0 && t < model.num_levels(), "level out of range");
  const double sc = model.output_scalers[static_cast<std::size_t>(t)].scale;
  return model.layers[static_cast<std::size_t>(t)].noise() * sc * sc;
}

}  // namespace mfgp
