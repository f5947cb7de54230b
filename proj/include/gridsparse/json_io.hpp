#pragma once

#include "gridsparse/attack.hpp"
#include "gridsparse/detection.hpp"
#include "gridsparse/estimation.hpp"

#include <json.hpp>

namespace gridsparse {

nlohmann::json vector_to_json(const Vector& v);

/// Accepts a bare array or an object holding the array under `key`.
Vector vector_from_json(const nlohmann::json& doc, const char* key);

/// {kind, a, c, k, converged, residual}
nlohmann::json to_json(const AttackVector& attack);
/// {method, x_hat, converged, iterations}
nlohmann::json to_json(const StateEstimate& estimate);
/// {precision, recall, accuracy}; absent ratios are null.
nlohmann::json to_json(const MetricBundle& bundle);
/// {residual_total, per_measurement, attacked_mask, tau}
nlohmann::json to_json(const DetectionResult& result);

}  // namespace gridsparse
