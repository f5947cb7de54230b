#pragma once

#include "gridsparse/admm.hpp"
#include "gridsparse/grid_model.hpp"
#include "gridsparse/partition.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridsparse {

struct MeasurementSnapshot {
  Vector z;
  std::optional<double> timestamp;
};

enum class EstimationMethod { wls, distributed_l1, collaborative_group, delta_cs };

std::string to_string(EstimationMethod method);

struct StateEstimate {
  Vector x_hat;
  EstimationMethod method = EstimationMethod::wls;
  /// Local iterates x_i (distributed: one length-D vector per row cluster;
  /// collaborative: one block per column group, ascending group order).
  std::vector<Vector> per_cluster;
  SolveSummary solver;
};

/// Weighted least squares with Lambda_ii = 1 / xi_i^2. Rank-deficient
/// models yield the minimum-norm minimizer.
StateEstimate wls_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot);

/// Consensus LASSO over row clusters; the estimate is the global variable.
StateEstimate distributed_state_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                                         const ClusterPartition& partition, const SolverConfig& config);

/// Group-lasso sharing ADMM over column clusters.
StateEstimate collaborative_state_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                                           const ClusterPartition& partition, const SolverConfig& config,
                                           const InnerSolverConfig& inner = {});

struct DeltaQuery {
  Vector previous_estimate;
  Vector measurement_difference;
  double gamma = 0.0;
  double epsilon = 0.0;
};

struct DeltaResult {
  Vector delta;
  IndexList changed_set;
  double lambda = 0.0;
  double residual_sq = 0.0;
};

/// Sparse state change from a measurement difference: the loosest l1
/// penalty (bisection, at most 20 steps) whose LASSO solution keeps
/// |dz - H delta|^2 <= gamma. Changed set = {i : |delta_i| >= epsilon}.
/// Throws InfeasibleError when gamma is below the least-squares residual.
DeltaResult delta_state_estimate(const MeasurementModel& model, const DeltaQuery& query, const SolverConfig& config);

}  // namespace gridsparse
