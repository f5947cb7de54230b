#include "gridsparse/json_io.hpp"

#include "gridsparse/error.hpp"

namespace gridsparse {

using json = nlohmann::json;

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& doc, const char* key) {
  const json* arr = &doc;
  if (doc.is_object()) {
    if (!doc.contains(key)) throw ValidationError(std::string("json object has no '") + key + "' array");
    arr = &doc.at(key);
  }
  if (!arr->is_array()) throw ValidationError(std::string("expected a json array for '") + key + "'");
  Vector out(static_cast<Index>(arr->size()));
  for (std::size_t i = 0; i < arr->size(); ++i) {
    if (!(*arr)[i].is_number()) throw ValidationError("non-numeric entry in '" + std::string(key) + "'");
    out(static_cast<Index>(i)) = (*arr)[i].get<double>();
  }
  return out;
}

json to_json(const AttackVector& attack) {
  json out;
  out["kind"] = to_string(attack.kind);
  out["a"] = vector_to_json(attack.a);
  out["c"] = vector_to_json(attack.c);
  out["k"] = attack.k ? json(*attack.k) : json(nullptr);
  out["converged"] = attack.solver.converged;
  out["residual"] = attack.residual;
  return out;
}

json to_json(const StateEstimate& estimate) {
  json out;
  out["method"] = to_string(estimate.method);
  out["x_hat"] = vector_to_json(estimate.x_hat);
  out["converged"] = estimate.solver.converged;
  out["iterations"] = estimate.solver.iterations;
  return out;
}

json to_json(const MetricBundle& bundle) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json out;
  out["precision"] = opt(bundle.precision);
  out["recall"] = opt(bundle.recall);
  out["accuracy"] = opt(bundle.accuracy);
  if (bundle.error_vector) out["error"] = vector_to_json(*bundle.error_vector);
  return out;
}

json to_json(const DetectionResult& result) {
  json out;
  out["residual_total"] = result.residual_total;
  out["per_measurement"] = vector_to_json(result.per_measurement);
  out["attacked_mask"] = json::array();
  for (bool b : result.attacked_mask) out["attacked_mask"].push_back(b);
  out["tau"] = result.tau;
  return out;
}

}  // namespace gridsparse
