#include "gridsparse/estimation.hpp"

#include "gridsparse/error.hpp"

#include <cmath>

namespace gridsparse {

std::string to_string(EstimationMethod method) {
  switch (method) {
    case EstimationMethod::wls: return "wls";
    case EstimationMethod::distributed_l1: return "distributed";
    case EstimationMethod::collaborative_group: return "collaborative";
    case EstimationMethod::delta_cs: return "delta";
  }
  return "unknown";
}

namespace {

void check_snapshot(const MeasurementModel& model, const MeasurementSnapshot& snapshot) {
  if (snapshot.z.size() != model.measurements())
    throw ValidationError("snapshot has " + std::to_string(snapshot.z.size()) + " measurements, model expects " +
                          std::to_string(model.measurements()));
}

}  // namespace

StateEstimate wls_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot) {
  check_snapshot(model, snapshot);
  if (model.noise_variances.size() != model.measurements() || (model.noise_variances.array() <= 0.0).any())
    throw ValidationError("wls: noise variances must be positive");
  // Whitening: minimize |W^(1/2) (z - H x)|^2, minimum-norm solution.
  const Vector w = model.noise_variances.cwiseSqrt().cwiseInverse();
  const Matrix Hw = w.asDiagonal() * model.H;
  StateEstimate out;
  out.x_hat = linalg::min_norm_solve(Hw, w.cwiseProduct(snapshot.z));
  out.method = EstimationMethod::wls;
  out.solver = {true, 0};
  return out;
}

StateEstimate distributed_state_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                                         const ClusterPartition& partition, const SolverConfig& config) {
  check_snapshot(model, snapshot);
  if (partition.axis != ClusterPartition::Axis::rows)
    throw ValidationError("distributed estimation: partition must group measurement rows");
  partition.validate(model.measurements());
  const ClusterPartition canon = partition.canonical();

  RowBlocks blocks;
  for (const auto& g : canon.groups)
    blocks.push_back({linalg::select_rows(model.H, g), linalg::select(snapshot.z, g)});
  SolveResult solve = consensus_lasso_admm(blocks, config);

  StateEstimate out;
  out.x_hat = std::move(solve.solution);
  out.method = EstimationMethod::distributed_l1;
  out.per_cluster = std::move(solve.local);
  out.solver = {solve.converged, solve.iterations};
  return out;
}

StateEstimate collaborative_state_estimate(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                                           const ClusterPartition& partition, const SolverConfig& config,
                                           const InnerSolverConfig& inner) {
  check_snapshot(model, snapshot);
  if (partition.axis != ClusterPartition::Axis::columns)
    throw ValidationError("collaborative estimation: partition must group state columns");
  partition.validate(model.states());
  SolveResult solve = sharing_group_lasso_admm({model.H, partition.groups}, snapshot.z, config, inner);

  StateEstimate out;
  out.x_hat = std::move(solve.solution);
  out.method = EstimationMethod::collaborative_group;
  out.per_cluster = std::move(solve.local);
  out.solver = {solve.converged, solve.iterations};
  return out;
}

DeltaResult delta_state_estimate(const MeasurementModel& model, const DeltaQuery& query, const SolverConfig& config) {
  config.validate();
  if (!(query.gamma > 0.0) || !(query.epsilon > 0.0)) throw ValidationError("delta estimate: gamma and epsilon must be positive");
  const Vector& dz = query.measurement_difference;
  if (dz.size() != model.measurements()) throw ValidationError("delta estimate: measurement difference has wrong length");
  const Matrix& H = model.H;

  auto residual_sq = [&](const Vector& delta) { return (dz - H * delta).squaredNorm(); };
  auto finish = [&](Vector delta, double lambda) {
    DeltaResult out;
    out.residual_sq = residual_sq(delta);
    out.changed_set = linalg::support(delta, 0.0);
    std::erase_if(out.changed_set, [&](Index i) { return std::abs(delta(i)) < query.epsilon; });
    out.delta = std::move(delta);
    out.lambda = lambda;
    return out;
  };

  if (dz.squaredNorm() <= query.gamma) return finish(Vector::Zero(H.cols()), 0.0);

  // Loosest feasible point: the minimum-norm least-squares fit.
  Vector best = linalg::min_norm_solve(H, dz);
  if (residual_sq(best) > query.gamma)
    throw InfeasibleError("delta estimate: gamma=" + std::to_string(query.gamma) +
                          " is below the least-squares residual " + std::to_string(residual_sq(best)));
  double best_lambda = 0.0;

  LassoAdmm solver(H);
  double lo = 0.0;
  double hi = (H.transpose() * dz).cwiseAbs().maxCoeff();  // zero solution at and above this
  for (int step = 0; step < 20; ++step) {
    const double mid = 0.5 * (lo + hi);
    SolverConfig cfg = config;
    cfg.lambda = mid;
    Vector delta = solver.lasso(dz, cfg).solution;
    if (residual_sq(delta) <= query.gamma) {
      best = std::move(delta);
      best_lambda = mid;
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return finish(std::move(best), best_lambda);
}

}  // namespace gridsparse
