#include "gridsparse/detection.hpp"

#include "gridsparse/error.hpp"

namespace gridsparse {

ResidualSummary residuals(const Matrix& H, const Vector& z, const Vector& x_hat) {
  if (H.rows() != z.size() || H.cols() != x_hat.size()) throw ValidationError("residuals: dimension mismatch");
  ResidualSummary out;
  out.per_measurement = (z - H * x_hat).array().square();
  out.total = out.per_measurement.sum();
  return out;
}

ResidualSummary residuals(const MeasurementModel& model, const MeasurementSnapshot& snapshot,
                          const StateEstimate& estimate) {
  return residuals(model.H, snapshot.z, estimate.x_hat);
}

double tau_threshold(const Matrix& H, double noise_sigma, const Vector& noise_variances) {
  if (!(noise_sigma > 0.0)) throw ValidationError("tau: noise sigma must be positive");
  if (noise_variances.size() != H.rows()) throw ValidationError("tau: covariance has wrong size");
  if ((noise_variances.array() <= 0.0).any()) throw ValidationError("tau: noise variances must be positive");
  const Vector inv = noise_variances.cwiseInverse();
  const Matrix HtSinv = H.transpose() * inv.asDiagonal();
  const Matrix gain = linalg::pseudo_inverse(HtSinv * H) * HtSinv;
  Matrix M = -H * gain;
  M.diagonal().array() += 1.0;
  return 2.0 * noise_sigma * linalg::induced_inf_norm(M);
}

double tau_threshold(const MeasurementModel& model, double noise_sigma) {
  return tau_threshold(model.H, noise_sigma, model.noise_variances);
}

std::vector<bool> detect(const Vector& per_measurement, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("detect: tau must be non-negative");
  std::vector<bool> mask(static_cast<std::size_t>(per_measurement.size()));
  for (Index i = 0; i < per_measurement.size(); ++i) mask[static_cast<std::size_t>(i)] = per_measurement(i) > tau;
  return mask;
}

DetectionResult run_detection(const Matrix& H, const Vector& z, const Vector& x_hat, double tau) {
  ResidualSummary r = residuals(H, z, x_hat);
  DetectionResult out;
  out.residual_total = r.total;
  out.attacked_mask = detect(r.per_measurement, tau);
  out.per_measurement = std::move(r.per_measurement);
  out.tau = tau;
  return out;
}

ConfusionCounts confusion(const std::vector<bool>& mask, const IndexList& true_support) {
  std::vector<bool> attacked(mask.size(), false);
  for (Index i : true_support) {
    if (i < 0 || static_cast<std::size_t>(i) >= mask.size()) throw ValidationError("confusion: support index out of range");
    attacked[static_cast<std::size_t>(i)] = true;
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && attacked[i]) ++c.tp;
    else if (mask[i]) ++c.fp;
    else if (attacked[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricBundle metrics(const ConfusionCounts& counts) {
  auto ratio = [](Index num, Index den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  MetricBundle out;
  out.precision = ratio(counts.tp, counts.tp + counts.fp);
  out.recall = ratio(counts.tp, counts.tp + counts.fn);
  out.accuracy = ratio(counts.tp + counts.tn, counts.total());
  return out;
}

ConstructionProbabilities construction_probabilities(std::span<const Vector> constructed,
                                                     std::span<const Vector> reference, double zero_tol) {
  if (constructed.size() != reference.size()) throw ValidationError("construction probabilities: list lengths differ");
  if (!(zero_tol > 0.0)) throw ValidationError("construction probabilities: zero_tol must be positive");
  long hit_nonzero = 0, nonzero = 0, hit_zero = 0, zero = 0;
  for (std::size_t r = 0; r < constructed.size(); ++r) {
    const Vector& a_hat = constructed[r];
    const Vector& a = reference[r];
    if (a_hat.size() != a.size()) throw ValidationError("construction probabilities: vector lengths differ");
    for (Index i = 0; i < a.size(); ++i) {
      const bool ref_nz = std::abs(a(i)) > zero_tol;
      const bool hat_nz = std::abs(a_hat(i)) > zero_tol;
      if (ref_nz) {
        ++nonzero;
        if (hat_nz) ++hit_nonzero;
      } else {
        ++zero;
        if (!hat_nz) ++hit_zero;
      }
    }
  }
  ConstructionProbabilities out;
  if (nonzero > 0) out.p_nonzero = static_cast<double>(hit_nonzero) / static_cast<double>(nonzero);
  if (zero > 0) out.p_zero = static_cast<double>(hit_zero) / static_cast<double>(zero);
  return out;
}

Vector attack_error(const MeasurementModel& model, const MeasurementSnapshot& snapshot, const StateEstimate& estimate) {
  return residuals(model, snapshot, estimate).per_measurement;
}

}  // namespace gridsparse
