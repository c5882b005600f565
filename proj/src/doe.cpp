#include "mfgp/doe.hpp"

#include "mfgp/error.hpp"
#include "mfgp/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mfgp {

Bounds unit_bounds(int d) { return Bounds(static_cast<std::size_t>(d), {0.0, 1.0}); }

Eigen::MatrixXd lhs_sample(int n, int d, const Bounds& bounds, std::uint64_t seed) {
  MFGP_REQUIRE(n >= 1, "lhs_sample needs n >= 1");
  MFGP_REQUIRE(d >= 1, "lhs_sample needs d >= 1");
  MFGP_REQUIRE(static_cast<int>(bounds.size()) == d,
               "lhs_sample needs one bound pair per dimension");
  Rng rng(seed);
  Eigen::MatrixXd out(n, d);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int k = 0; k < d; ++k) {
    const auto [lo, hi] = bounds[static_cast<std::size_t>(k)];
    MFGP_REQUIRE(lo < hi, "lhs_sample bounds need lower < upper");
    std::iota(strata.begin(), strata.end(), 0);
    // Fisher-Yates with our own uniform draw keeps the stream portable.
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform01(rng) * (i + 1));
      std::swap(strata[static_cast<std::size_t>(i)],
                strata[static_cast<std::size_t>(std::min(j, i))]);
    }
    for (int i = 0; i < n; ++i) {
      const double u = (strata[static_cast<std::size_t>(i)] + uniform01(rng)) / n;
      out(i, k) = lo + (hi - lo) * u;
    }
  }
  return out;
}

Eigen::MatrixXd make_nested(const Eigen::MatrixXd& lf, const Eigen::MatrixXd& hf) {
  MFGP_REQUIRE(hf.rows() <= lf.rows(),
               "make_nested needs no more HF points than LF points");
  MFGP_REQUIRE(hf.rows() == 0 || hf.cols() == lf.cols(),
               "make_nested: LF and HF dimensions differ");
  Eigen::MatrixXd out = lf;
  std::vector<bool> removed(static_cast<std::size_t>(lf.rows()), false);
  for (Eigen::Index h = 0; h < hf.rows(); ++h) {
    Eigen::Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lf.rows(); ++i) {
      if (removed[static_cast<std::size_t>(i)]) {
        continue;
      }
      const double dist = (lf.row(i) - hf.row(h)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    removed[static_cast<std::size_t>(best)] = true;
    out.row(best) = hf.row(h);
  }
  return out;
}

std::vector<int> rows_not_in(const Eigen::MatrixXd& inner,
                             const Eigen::MatrixXd& outer, double tol) {
  std::vector<int> missing;
  for (Eigen::Index i = 0; i < inner.rows(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < outer.rows() && !found; ++j) {
      found = inner.cols() == outer.cols() &&
              (inner.row(i) - outer.row(j)).cwiseAbs().maxCoeff() <= tol;
    }
    if (!found) {
      missing.push_back(static_cast<int>(i));
    }
  }
  return missing;
}

bool rows_subset(const Eigen::MatrixXd& inner, const Eigen::MatrixXd& outer,
                 double tol) {
  return rows_not_in(inner, outer, tol).empty();
}

}  // namespace mfgp
