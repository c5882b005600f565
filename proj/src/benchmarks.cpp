#include "mfgp/benchmarks.hpp"

#include "mfgp/error.hpp"

#include <cmath>
#include <numbers>

namespace mfgp {

namespace {

VectorXd eval_rows(const std::function<double(const VectorXd&)>& f, const MatrixXd& X) {
  VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = f(X.row(i).transpose());
  return y;
}

}  // namespace

VectorXd BenchmarkProblem::eval_lf(const MatrixXd& X) const {
  MFGP_REQUIRE(X.cols() == dim, "input dimension differs from the problem");
  return eval_rows(lf, X);
}

VectorXd BenchmarkProblem::eval_hf(const MatrixXd& X) const {
  MFGP_REQUIRE(X.cols() == dim, "input dimension differs from the problem");
  return eval_rows(hf, X);
}

BenchmarkProblem bench_1d(int a) {
  MFGP_REQUIRE(a >= 1 && a <= 4, "bench_1d parameter a must be in {1, 2, 3, 4}");
  constexpr double pi = std::numbers::pi;
  BenchmarkProblem p;
  p.name = "bench_1d_a" + std::to_string(a);
  p.dim = 1;
  p.bounds = unit_bounds(1);
  p.hf = [](const VectorXd& x) { return std::sin(2.0 * pi * x(0)); };
  p.lf = [a](const VectorXd& x) {
    return (x(0) / 4.0 - std::numbers::sqrt2) *
           std::pow(std::sin(2.0 * pi * x(0) + a * pi), a);
  };
  return p;
}

BenchmarkProblem bench_vardim(int d) {
  MFGP_REQUIRE(d >= 2, "bench_vardim needs d >= 2");
  BenchmarkProblem p;
  p.name = "bench_vardim_d" + std::to_string(d);
  p.dim = d;
  p.bounds = Bounds(static_cast<std::size_t>(d), {-3.0, 3.0});
  p.hf = [](const VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) * x(i + 1) - x(i);
      const double b = x(i) - 1.0;
      s += a * a + b * b;
    }
    return s;
  };
  p.lf = [](const VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double xi = x(i);
      const double xn = x(i + 1);
      s += 0.9 * std::pow(xn, 4) + 2.2 * xi * xi - 1.8 * xi * xn * xn + 0.5;
    }
    return s;
  };
  return p;
}

double cantilever_lf(double force, double length, double section) {
  MFGP_REQUIRE(force > 0.0 && length > 0.0 && section > 0.0,
               "cantilever inputs must be positive");
  const double bending = 6.0 * force * length / std::pow(section, 3);
  const double shear = force / (section * section);
  return std::sqrt(bending * bending + 3.0 * shear * shear);
}

Bounds cantilever_bounds() { return {{850e3, 950e3}, {2.0, 3.0}, {0.25, 0.4}}; }

double fidelity_r2(const BenchmarkProblem& problem, const MatrixXd& X) {
  const VectorXd lf = problem.eval_lf(X);
  const VectorXd hf = problem.eval_hf(X);
  const double sst = (lf.array() - lf.mean()).square().sum();
  MFGP_REQUIRE(sst > 0.0, "low-fidelity values are constant");
  return 1.0 - (lf - hf).squaredNorm() / sst;
}

std::vector<ProblemInfo> list_problems() {
  return {
      {"bench_1d", "a in {1, 2, 3, 4} (default 1)",
       "1D pair on [0, 1]: hf = sin(2 pi x), lf = (x/4 - sqrt 2) sin(2 pi x + a pi)^a"},
      {"bench_vardim", "dim >= 2 (default 2)",
       "Rosenbrock-type pair on [-3, 3]^dim"},
      {"csv", "csv = <path>, dim = <d>",
       "external dataset; columns x1..xd, y, fidelity (1 = lowest)"},
  };
}

}  // namespace mfgp
