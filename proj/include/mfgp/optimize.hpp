#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfgp {

/// f(x); writes the gradient into *grad when grad is non-null. May throw
/// NumericalFailure, which the optimizer treats as an infinite value.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
};

struct BfgsOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  /// Largest move of any coordinate in one line search.
  double max_step = 3.0;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  /// Objective at every accepted iterate, starting point included.
  std::vector<double> trace;
  std::string message;
};

/// Projected BFGS with an Armijo backtracking line search on a box.
BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0,
                         const Box& box, const BfgsOptions& options = {});

struct MultiStartResult {
  BfgsResult best;
  /// Final value per restart (infinity for failed restarts).
  std::vector<double> restart_values;
  std::vector<std::string> diagnostics;
  int failed = 0;
};

/// Runs BFGS from `restarts` starting points: `first` (when non-empty) and
/// then a Latin hypercube over `init_box`. Throws TrainingFailure when every
/// restart fails.
MultiStartResult multi_start_minimize(const Objective& f, const Box& box,
                                      const Box& init_box, int restarts,
                                      std::uint64_t seed,
                                      const Eigen::VectorXd& first,
                                      const BfgsOptions& options = {});

}  // namespace mfgp
