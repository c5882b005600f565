#pragma once

#include "mfgp/gp.hpp"

#include <vector>

namespace mfgp {

/// Per-fidelity datasets, lowest fidelity first. Levels are indexed from 0 in
/// the C++ and Python APIs.
struct MultiFidelityDataset {
  std::vector<Dataset> levels;

  int num_levels() const { return static_cast<int>(levels.size()); }
  int dim() const { return levels.empty() ? 0 : levels.front().dim(); }
  const Dataset& top() const { return levels.back(); }

  /// True when every level's inputs are a row subset of the level below.
  bool nested(double tol = 1e-12) const;

  /// All inputs stacked level by level.
  MatrixXd stacked_inputs() const;
  VectorXd stacked_outputs() const;
  /// Level index of each stacked row.
  Eigen::VectorXi stacked_levels() const;
};

/// Shapes, finiteness and a common dimension; at least `min_levels` levels.
void validate(const MultiFidelityDataset& data, int min_levels = 2);

/// Throws ContractViolation naming the offending rows when data is not nested.
void require_nested(const MultiFidelityDataset& data, double tol = 1e-12);

}  // namespace mfgp
