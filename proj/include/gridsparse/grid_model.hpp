#pragma once

#include "gridsparse/linalg.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsparse {

struct Bus {
  int id = 0;
  bool is_reference = false;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per unit, nonzero

  bool operator==(const Branch&) const = default;
};

/// Bus/branch topology of a test system. Construct through one of the
/// parsers, which validate; a hand-built case should call validate().
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;

  /// Throws ValidationError naming the offending element when ids repeat,
  /// a branch endpoint is unknown, a reactance is zero, the reference bus
  /// is not unique, or the branch graph is disconnected.
  void validate() const;

  /// Column of bus `id` in the Jacobian (position in `buses`).
  Index bus_column(int id) const;

  bool operator==(const GridCase&) const = default;
};

/// Parses the MATPOWER subset (`mpc.baseMVA`, `mpc.bus`, `mpc.branch`).
/// Bus type 3 marks the reference bus; branch column 4 is the reactance.
GridCase parse_matpower(std::string_view text, std::string name = {});

/// Parses the JSON grid format:
/// {"name", "base_mva", "buses": [{"id", "reference"}], "branches": [{"from", "to", "x"}]}.
GridCase parse_grid_json(std::string_view text);

/// Dispatches on content: JSON when the first non-blank character is '{'.
GridCase parse_case(std::string_view text, std::string name = {});

/// Reads and parses a case file; `ieee9` .. `ieee300` resolve to the
/// bundled MATPOWER files.
GridCase load_case(const std::string& path_or_system);

std::string to_grid_json(const GridCase& grid_case);

enum class MeasurementKind { injection, flow };

/// `element` is a bus id for injections and a 0-based branch position for flows.
struct MeasurementDescriptor {
  MeasurementKind kind = MeasurementKind::injection;
  int element = 0;

  bool operator==(const MeasurementDescriptor&) const = default;
};

struct MeasurementScheme {
  /// Empty optional selects the default: one injection per bus (bus order)
  /// followed by one from-side flow per branch (branch order).
  std::optional<std::vector<MeasurementDescriptor>> descriptors;
  double noise_sigma = 0.01;

  static MeasurementScheme default_scheme() { return {}; }
  static MeasurementScheme flows_only(const GridCase& grid_case);
};

/// Linear DC measurement model z = Hx + n.
struct MeasurementModel {
  Matrix H;
  std::vector<MeasurementDescriptor> descriptors;
  Vector noise_variances;

  Index measurements() const { return H.rows(); }
  Index states() const { return H.cols(); }
};

/// Flow row of branch (i, j): +1/x at column i, -1/x at column j. Injection
/// row of bus i: sum of incident flows oriented out of i. All bus columns
/// are kept.
MeasurementModel build_dc_jacobian(const GridCase& grid_case,
                                   const MeasurementScheme& scheme = MeasurementScheme::default_scheme());

struct StructureReport {
  Index measurements = 0;
  Index states = 0;
  Index rank = 0;
  double zero_fraction = 0.0;
};

/// Numerical rank uses singular values above `rank_tolerance * sigma_max`;
/// the zero fraction counts exact structural zeros.
StructureReport structure_report(const MeasurementModel& model, double rank_tolerance = 1e-9);

}  // namespace gridsparse
