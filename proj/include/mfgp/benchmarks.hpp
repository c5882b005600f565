#pragma once

#include "mfgp/doe.hpp"
#include "mfgp/kernels.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mfgp {

struct BenchmarkProblem {
  std::string name;
  int dim = 1;
  Bounds bounds;
  std::function<double(const VectorXd&)> lf;
  std::function<double(const VectorXd&)> hf;
  int test_set_size = 1000;

  /// Row-wise evaluation.
  VectorXd eval_lf(const MatrixXd& X) const;
  VectorXd eval_hf(const MatrixXd& X) const;
};

/// hf(x) = sin(2 pi x); lf(x) = (x/4 - sqrt 2) sin(2 pi x + a pi)^a on [0, 1].
BenchmarkProblem bench_1d(int a);

/// Rosenbrock-type pair on [-3, 3]^d, d >= 2.
BenchmarkProblem bench_vardim(int d);

/// Von Mises stress at the clamped end of a square-section cantilever under a
/// tip load: sqrt(sigma_b^2 + 3 tau^2), sigma_b = 6 F L / d^3, tau = F / d^2.
double cantilever_lf(double force, double length, double section);

/// Box of the cantilever inputs (F [N], L [m], d [m]).
Bounds cantilever_bounds();

/// Coefficient of determination of hf as a predictor of lf over the rows of X:
/// 1 - sum (lf - hf)^2 / sum (lf - mean lf)^2.
double fidelity_r2(const BenchmarkProblem& problem, const MatrixXd& X);

struct ProblemInfo {
  std::string name;
  std::string parameters;
  std::string description;
};

/// Builtin problems accepted by the experiment runner.
std::vector<ProblemInfo> list_problems();

}  // namespace mfgp
