#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace mfgp {

using Bounds = std::vector<std::pair<double, double>>;

Bounds unit_bounds(int d);

/// Latin hypercube design: every column has exactly one point in each of the
/// n strata of [lower, upper), uniformly placed inside its stratum.
Eigen::MatrixXd lhs_sample(int n, int d, const Bounds& bounds, std::uint64_t seed);

/// Rebuilds an LF design so it contains every HF point: for each HF point in
/// order, the nearest not-yet-removed LF point (ties to the lowest index) is
/// replaced by it. Output size equals the LF size.
Eigen::MatrixXd make_nested(const Eigen::MatrixXd& lf, const Eigen::MatrixXd& hf);

/// True when every row of `inner` matches some row of `outer` within `tol`.
bool rows_subset(const Eigen::MatrixXd& inner, const Eigen::MatrixXd& outer,
                 double tol = 1e-12);

/// Indices of the rows of `inner` with no match in `outer`.
std::vector<int> rows_not_in(const Eigen::MatrixXd& inner,
                             const Eigen::MatrixXd& outer, double tol = 1e-12);

}  // namespace mfgp
