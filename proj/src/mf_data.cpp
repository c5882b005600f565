#include "mfgp/mf_data.hpp"

#include "mfgp/doe.hpp"
#include "mfgp/error.hpp"

#include <sstream>

namespace mfgp {

bool MultiFidelityDataset::nested(double tol) const {
  for (std::size_t t = 1; t < levels.size(); ++t) {
    if (!rows_subset(levels[t].X, levels[t - 1].X, tol)) {
      return false;
    }
  }
  return true;
}

MatrixXd MultiFidelityDataset::stacked_inputs() const {
  Eigen::Index rows = 0;
  for (const auto& l : levels) rows += l.size();
  MatrixXd X(rows, dim());
  Eigen::Index at = 0;
  for (const auto& l : levels) {
    X.middleRows(at, l.size()) = l.X;
    at += l.size();
  }
  return X;
}

VectorXd MultiFidelityDataset::stacked_outputs() const {
  Eigen::Index rows = 0;
  for (const auto& l : levels) rows += l.size();
  VectorXd y(rows);
  Eigen::Index at = 0;
  for (const auto& l : levels) {
    y.segment(at, l.size()) = l.y;
    at += l.size();
  }
  return y;
}

Eigen::VectorXi MultiFidelityDataset::stacked_levels() const {
  Eigen::Index rows = 0;
  for (const auto& l : levels) rows += l.size();
  Eigen::VectorXi lev(rows);
  Eigen::Index at = 0;
  for (std::size_t t = 0; t < levels.size(); ++t) {
    lev.segment(at, levels[t].size()).setConstant(static_cast<int>(t));
    at += levels[t].size();
  }
  return lev;
}

void validate(const MultiFidelityDataset& data, int min_levels) {
  MFGP_REQUIRE(data.num_levels() >= min_levels,
               "multi-fidelity dataset needs at least " + std::to_string(min_levels) +
                   " levels");
  for (const auto& level : data.levels) {
    validate(level);
    MFGP_REQUIRE(level.dim() == data.dim(),
                 "all fidelity levels must share the input dimension");
  }
}

void require_nested(const MultiFidelityDataset& data, double tol) {
  for (std::size_t t = 1; t < data.levels.size(); ++t) {
    const std::vector<int> missing =
        rows_not_in(data.levels[t].X, data.levels[t - 1].X, tol);
    if (missing.empty()) {
      continue;
    }
    std::ostringstream msg;
    msg << "dataset is not nested: rows";
    for (int r : missing) msg << ' ' << r;
    msg << " of level " << t << " are not inputs of level " << t - 1;
    throw ContractViolation(msg.str());
  }
}

}  // namespace mfgp
