#include "mfgp/benchmarks.hpp"
#include "mfgp/doe.hpp"
#include "mfgp/error.hpp"
#include "mfgp/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mfgp {
namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Bench1d, ClosedFormValues) {
  for (int a = 1; a <= 4; ++a) {
    const BenchmarkProblem p = bench_1d(a);
    EXPECT_NEAR(p.hf(vec({0.25})), 1.0, 1e-15);
  }
  EXPECT_NEAR(bench_1d(1).lf(vec({0.0})), 0.0, 1e-15);
  // sin(pi/2 + pi) = -1, so lf(0.25) = -(1/16 - sqrt 2) for a = 1.
  EXPECT_NEAR(bench_1d(1).lf(vec({0.25})), std::sqrt(2.0) - 0.0625, 1e-14);
  EXPECT_NEAR(bench_1d(2).lf(vec({0.25})), 0.0625 - std::sqrt(2.0), 1e-14);
}

TEST(Bench1d, InvalidParameterRejected) {
  EXPECT_THROW(bench_1d(0), ContractViolation);
  EXPECT_THROW(bench_1d(5), ContractViolation);
}

TEST(BenchVardim, ClosedFormValues) {
  for (int d : {2, 5, 10}) {
    const BenchmarkProblem p = bench_vardim(d);
    EXPECT_EQ(p.hf(VectorXd::Ones(d)), 0.0);
    EXPECT_NEAR(p.lf(VectorXd::Zero(d)), 0.5 * (d - 1), 1e-15);
    EXPECT_EQ(p.bounds.size(), static_cast<std::size_t>(d));
  }
  // d = 2 at x = (1, 2): hf = (4 - 1)^2 + 0 = 9; lf = 0.9*16 + 2.2 - 1.8*4 + 0.5.
  EXPECT_NEAR(bench_vardim(2).hf(vec({1.0, 2.0})), 9.0, 1e-14);
  EXPECT_NEAR(bench_vardim(2).lf(vec({1.0, 2.0})), 14.4 + 2.2 - 7.2 + 0.5, 1e-13);
  EXPECT_THROW(bench_vardim(1), ContractViolation);
}

TEST(Benchmarks, FiniteOverTheirBoxes) {
  std::vector<BenchmarkProblem> problems;
  for (int a = 1; a <= 4; ++a) problems.push_back(bench_1d(a));
  for (int d : {2, 5, 10}) problems.push_back(bench_vardim(d));
  for (const auto& p : problems) {
    const MatrixXd X = lhs_sample(10000, p.dim, p.bounds, 3);
    EXPECT_TRUE(p.eval_lf(X).allFinite()) << p.name;
    EXPECT_TRUE(p.eval_hf(X).allFinite()) << p.name;
    EXPECT_EQ(p.eval_hf(X), p.eval_hf(X)) << p.name;
  }
}

TEST(Benchmarks, FidelityCorrelationOfLinearCases) {
  MatrixXd grid(1000, 1);
  for (int i = 0; i < 1000; ++i) grid(i, 0) = (i + 0.5) / 1000.0;
  EXPECT_NEAR(fidelity_r2(bench_1d(1), grid), 0.97, 0.05);
  EXPECT_NEAR(fidelity_r2(bench_1d(3), grid), 0.87, 0.05);
  for (int d : {2, 5, 10}) {
    const BenchmarkProblem p = bench_vardim(d);
    EXPECT_NEAR(fidelity_r2(p, lhs_sample(10000, d, p.bounds, 11)), 0.95, 0.05) << d;
  }
}

TEST(Cantilever, ReferenceLoadCase) {
  const double F = 900e3;
  const double L = 2.5;
  const double d = 0.3;
  const double bending = 6.0 * F * L / (d * d * d);
  const double shear = F / (d * d);
  EXPECT_NEAR(bending, 5.0e8, 1.0);
  EXPECT_NEAR(shear, 1.0e7, 1e-6);
  EXPECT_NEAR(cantilever_lf(F, L, d), 5.003e8, 0.0005e8);
  EXPECT_NEAR(cantilever_lf(F, L, d), std::hypot(5.0e8, std::sqrt(3.0) * 1.0e7), 1e-6);
}

TEST(Cantilever, HomogeneousInForce) {
  const MatrixXd X = lhs_sample(50, 3, cantilever_bounds(), 4);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double s = cantilever_lf(X(i, 0), X(i, 1), X(i, 2));
    EXPECT_NEAR(cantilever_lf(2.0 * X(i, 0), X(i, 1), X(i, 2)), 2.0 * s, 1e-6 * s);
  }
  EXPECT_LT(cantilever_lf(1e-12, 2.5, 0.3), 1e-3);
  EXPECT_THROW(cantilever_lf(0.0, 2.5, 0.3), ContractViolation);
  EXPECT_THROW(cantilever_lf(1.0, -2.5, 0.3), ContractViolation);
}

TEST(Metrics, R2) {
  const VectorXd y = vec({1.0, 2.0, 3.0});
  EXPECT_EQ(metric_r2(y, y), 1.0);
  EXPECT_NEAR(metric_r2(y, VectorXd::Constant(3, 2.0)), 0.0, 1e-15);
  // Residuals (-2, 0, 2): 1 - 8 / 2.
  EXPECT_NEAR(metric_r2(y, vec({3.0, 2.0, 1.0})), -3.0, 1e-15);
  EXPECT_THROW(metric_r2(VectorXd::Ones(3), y), UndefinedMetric);
  EXPECT_THROW(metric_r2(y, vec({1.0, 2.0})), ContractViolation);
}

TEST(Metrics, Rmse) {
  const VectorXd y = vec({1.0, 2.0, 3.0});
  EXPECT_EQ(metric_rmse(y, y), 0.0);
  EXPECT_NEAR(metric_rmse(y, y.array() - 0.7), 0.7, 1e-15);
  EXPECT_NEAR(metric_rmse(y, vec({2.0, 2.0, 5.0})), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Metrics, Mnll) {
  const VectorXd y = vec({1.0, -2.0, 0.5});
  EXPECT_NEAR(metric_mnll(y, y, VectorXd::Ones(3)), 0.918938533204673, 1e-12);
  EXPECT_NEAR(metric_mnll(y, y, VectorXd::Constant(3, 0.01)), 0.918938533204673 + std::log(0.01),
              1e-12);
  EXPECT_NEAR(metric_mnll(y, y, VectorXd::Constant(3, 0.01)), -3.686, 1e-3);
  EXPECT_GT(metric_mnll(y, y, VectorXd::Constant(3, 1e8)), 15.0);
  EXPECT_THROW(metric_mnll(y, y, vec({1.0, 0.0, 1.0})), ContractViolation);
}

// For fixed residuals the MNLL as a function of a shared sigma is minimized at
// sigma^2 = mean squared residual and is monotone on each side.
TEST(Metrics, MnllUnimodalInSigma) {
  const VectorXd y = vec({0.3, -1.2, 2.0, 0.1});
  const VectorXd m = vec({0.0, -1.0, 1.5, 0.4});
  const double best = std::sqrt((y - m).squaredNorm() / 4.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double s = best / 50.0; s <= best; s *= 1.1) {
    const double v = metric_mnll(y, m, VectorXd::Constant(4, s));
    EXPECT_LT(v, prev);
    prev = v;
  }
  const double at_best = metric_mnll(y, m, VectorXd::Constant(4, best));
  EXPECT_LE(at_best, prev + 1e-15);
  prev = at_best;
  for (double s = best * 1.1; s <= best * 50.0; s *= 1.1) {
    const double v = metric_mnll(y, m, VectorXd::Constant(4, s));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

}  // namespace
}  // namespace mfgp
