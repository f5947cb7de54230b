#pragma once

#include "gridsparse/attack.hpp"
#include "gridsparse/estimation.hpp"
#include "gridsparse/grid_model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace gridsparse {

struct ResidualSummary {
  double total = 0.0;
  Vector per_measurement;  // (z_i - (H x_hat)_i)^2
};

ResidualSummary residuals(const Matrix& H, const Vector& z, const Vector& x_hat);
ResidualSummary residuals(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                          const StateEstimate& estimate);

/// tau = 2 xi_n |I - H (H^T S^-1 H)^+ H^T S^-1|_inf with S = diag(noise_variances).
double tau_threshold(const Matrix& H, double noise_sigma, const Vector& noise_variances);
double tau_threshold(const MeasurementModel& model, double noise_sigma);

/// Single-pass test: measurement i is flagged when its residual exceeds tau.
std::vector<bool> detect(const Vector& per_measurement, double tau);

struct DetectionResult {
  double residual_total = 0.0;
  Vector per_measurement;
  std::vector<bool> attacked_mask;
  double tau = 0.0;
};

DetectionResult run_detection(const Matrix& H, const Vector& z, const Vector& x_hat, double tau);

struct ConfusionCounts {
  Index tp = 0;
  Index fp = 0;
  Index tn = 0;
  Index fn = 0;

  Index total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const std::vector<bool>& mask, const IndexList& true_support);

/// Ratios with a zero denominator are absent.
struct MetricBundle {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> accuracy;
  std::optional<Vector> error_vector;
};

MetricBundle metrics(const ConfusionCounts& counts);

struct ConstructionProbabilities {
  std::optional<double> p_nonzero;  // Pr(a_hat_i != 0, a_i != 0) / Pr(a_i != 0)
  std::optional<double> p_zero;     // Pr(a_hat_i == 0, a_i == 0) / Pr(a_i == 0)
};

/// Pooled frequencies over every realization and index.
ConstructionProbabilities construction_probabilities(std::span<const Vector> constructed,
                                                     std::span<const Vector> reference, double zero_tol = 1e-6);

/// Attacker-side name for the per-measurement residual.
Vector attack_error(const MeasurementModel& model, const MeasurementSnapshot& snapshot, const StateEstimate& estimate);

}  // namespace gridsparse
