#include "mfgp/optimize.hpp"

#include "mfgp/doe.hpp"
#include "mfgp/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mfgp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;
constexpr double kRelativeFunctionTolerance = 1e-13;

double safe_eval(const Objective& f, const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  try {
    const double v = f(x, g);
    if (!std::isfinite(v) || (g != nullptr && !g->allFinite())) {
      return std::numeric_limits<double>::infinity();
    }
    return v;
  } catch (const NumericalFailure&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Gradient with the components that push against an active bound removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Box& box) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= box.lower(i) && g(i) > 0.0) || (x(i) >= box.upper(i) && g(i) < 0.0)) {
      pg(i) = 0.0;
    }
  }
  return pg;
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0,
                         const Box& box, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  result.x = box.clamp(x0);
  result.gradient.resize(n);
  result.value = safe_eval(f, result.x, &result.gradient);
  if (!std::isfinite(result.value)) {
    result.message = "objective not finite at the starting point";
    return result;
  }
  result.trace.push_back(result.value);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  bool h_scaled = false;
  Eigen::VectorXd g_new(n);

  while (result.iterations < options.max_iterations) {
    const Eigen::VectorXd pg = projected_gradient(result.x, result.gradient, box);
    if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      break;
    }

    Eigen::VectorXd p = -(H * result.gradient);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg(i) == 0.0) {
        p(i) = 0.0;
      }
    }
    if (p.dot(result.gradient) >= 0.0) {
      H.setIdentity();
      h_is_identity = true;
      h_scaled = false;
      p = -pg;
    }
    const double biggest = p.lpNorm<Eigen::Infinity>();
    if (biggest > options.max_step) {
      p *= options.max_step / biggest;
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (int ls = 0; ls < kMaxBacktracks; ++ls) {
      x_new = box.clamp(result.x + alpha * p);
      const Eigen::VectorXd step = x_new - result.x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) {
        break;
      }
      f_new = safe_eval(f, x_new, &g_new);
      if (std::isfinite(f_new) &&
          f_new <= result.value + kArmijo * result.gradient.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++result.iterations;
    if (!accepted) {
      if (!h_is_identity) {
        H.setIdentity();
        h_is_identity = true;
        h_scaled = false;
        continue;
      }
      result.message = "line search failed";
      break;
    }

    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = g_new - result.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!h_scaled) {
        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        h_scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += rho * rho * (sy + y.dot(Hy)) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
      h_is_identity = false;
    }

    const double decrease = result.value - f_new;
    result.x = x_new;
    result.value = f_new;
    result.gradient = g_new;
    result.trace.push_back(f_new);
    if (decrease <= kRelativeFunctionTolerance * (1.0 + std::abs(f_new))) {
      result.converged = true;
      result.message = "function tolerance reached";
      break;
    }
  }
  if (result.message.empty()) {
    result.message = "iteration limit reached";
  }
  return result;
}

MultiStartResult multi_start_minimize(const Objective& f, const Box& box,
                                      const Box& init_box, int restarts,
                                      std::uint64_t seed,
                                      const Eigen::VectorXd& first,
                                      const BfgsOptions& options) {
  MFGP_REQUIRE(restarts >= 1, "restarts must be >= 1");
  const auto n = static_cast<int>(box.lower.size());
  const int sampled = first.size() > 0 ? restarts - 1 : restarts;
  Eigen::MatrixXd starts(0, n);
  if (sampled > 0 && n > 0) {
    Bounds b;
    for (int i = 0; i < n; ++i) {
      const double lo = init_box.lower(i);
      const double hi = std::max(init_box.upper(i), lo + 1e-12);
      b.emplace_back(lo, hi);
    }
    starts = lhs_sample(sampled, n, b, seed);
  }

  MultiStartResult out;
  out.best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd x0;
    if (first.size() > 0 && r == 0) {
      x0 = first;
    } else {
      x0 = starts.row(first.size() > 0 ? r - 1 : r).transpose();
    }
    BfgsResult res = minimize_bfgs(f, x0, box, options);
    out.restart_values.push_back(res.value);
    std::ostringstream diag;
    diag << "restart " << r << ": value " << res.value << ", " << res.iterations
         << " iterations, " << res.message;
    out.diagnostics.push_back(diag.str());
    if (!std::isfinite(res.value)) {
      ++out.failed;
      continue;
    }
    if (res.value < out.best.value) {
      out.best = std::move(res);
    }
  }
  if (!std::isfinite(out.best.value)) {
    throw TrainingFailure("every optimizer restart failed", out.diagnostics);
  }
  return out;
}

}  // namespace mfgp
