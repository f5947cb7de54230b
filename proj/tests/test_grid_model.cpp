#include "gridsparse/error.hpp"
#include "gridsparse/grid_model.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace gridsparse;

namespace {

const char* kTriangle = R"({"name": "triangle", "base_mva": 100,
  "buses": [{"id": 1, "reference": true}, {"id": 2, "reference": false}, {"id": 3, "reference": false}],
  "branches": [{"from": 1, "to": 2, "x": 0.1}, {"from": 2, "to": 3, "x": 0.1}, {"from": 1, "to": 3, "x": 0.1}]})";

GridCase two_bus() {
  GridCase g;
  g.name = "two";
  g.buses = {{1, true}, {2, false}};
  g.branches = {{1, 2, 0.5}};
  g.validate();
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("triangle JSON parses") {
  const GridCase g = parse_grid_json(kTriangle);
  CHECK(g.buses.size() == 3);
  CHECK(g.branches.size() == 3);
  CHECK(g.buses[0].is_reference);
  CHECK(g.name == "triangle");
}

TEST_CASE("bundled case57 has 57 buses and 80 branches") {
  const GridCase g = load_case("ieee57");
  CHECK(g.buses.size() == 57);
  CHECK(g.branches.size() == 80);
  CHECK(g.base_mva == 100.0);
}

TEST_CASE("branch to an unknown bus is rejected by name") {
  GridCase g = parse_grid_json(kTriangle);
  g.branches.push_back({1, 99, 0.2});
  try {
    g.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("validation failures") {
  GridCase base = parse_grid_json(kTriangle);

  SUBCASE("zero reactance") {
    base.branches[1].reactance = 0.0;
    CHECK_THROWS_AS(base.validate(), ValidationError);
  }
  SUBCASE("duplicate id") {
    base.buses[2].id = 2;
    CHECK_THROWS_AS(base.validate(), ValidationError);
  }
  SUBCASE("two reference buses") {
    base.buses[1].is_reference = true;
    CHECK_THROWS_AS(base.validate(), ValidationError);
  }
  SUBCASE("no reference bus") {
    base.buses[0].is_reference = false;
    CHECK_THROWS_AS(base.validate(), ValidationError);
  }
  SUBCASE("disconnected") {
    base.buses.push_back({4, false});
    CHECK_THROWS_AS(base.validate(), ValidationError);
  }
}

TEST_CASE("MATPOWER syntax errors carry a line number") {
  const std::string text =
      "function mpc = bad\n"
      "mpc.baseMVA = 100;\n"
      "mpc.bus = [\n"
      "  1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
      "  2 1 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
      "];\n"
      "mpc.branch = [\n"
      "  1 2 0 0.1x 0 0 0 0 0 0 1 -360 360;\n"
      "];\n";
  try {
    parse_matpower(text, "bad");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 8);
  }
}

TEST_CASE("MATPOWER comments and extra columns are ignored") {
  const std::string text =
      "% header comment\n"
      "mpc.baseMVA = 50; % trailing\n"
      "mpc.bus = [\n"
      "  1 3 0 0 0 0 1 1 0 345 1 1.1 0.9; % slack\n"
      "  % a commented row\n"
      "  7 1 0 0 0 0 1 1 0 345 1 1.1 0.9\n"
      "];\n"
      "mpc.gen = [ 1 0 0 0 0 1 100 1 0 0 ];\n"
      "mpc.branch = [ 1 7 0.01 0.25 0 0 0 0 0 0 1 -360 360 ];\n";
  const GridCase g = parse_matpower(text, "tiny");
  CHECK(g.base_mva == 50.0);
  REQUIRE(g.buses.size() == 2);
  CHECK(g.buses[1].id == 7);
  REQUIRE(g.branches.size() == 1);
  CHECK(g.branches[0].reactance == doctest::Approx(0.25));
}

TEST_CASE("parse_case dispatches on content") {
  CHECK(parse_case(kTriangle).buses.size() == 3);
  CHECK(parse_case(read_file(std::string(GRIDSPARSE_DATA_DIR) + "/case14.m"), "case14").buses.size() == 14);
}

TEST_CASE("load_case reports missing files as I/O errors") {
  CHECK_THROWS_AS(load_case("/nonexistent/case.m"), IoError);
}

TEST_CASE("JSON round trip") {
  for (const char* system : {"ieee9", "ieee57", "ieee118"}) {
    const GridCase g = load_case(system);
    CHECK(parse_grid_json(to_grid_json(g)) == g);
  }
}

TEST_CASE("two-bus flow-only Jacobian") {
  const GridCase g = two_bus();
  const MeasurementModel m = build_dc_jacobian(g, MeasurementScheme::flows_only(g));
  REQUIRE(m.H.rows() == 1);
  REQUIRE(m.H.cols() == 2);
  CHECK(m.H(0, 0) == doctest::Approx(2.0));
  CHECK(m.H(0, 1) == doctest::Approx(-2.0));
  const StructureReport r = structure_report(m);
  CHECK(r.rank == 1);
  CHECK(r.zero_fraction == 0.0);
}

TEST_CASE("empty descriptor list is rejected") {
  MeasurementScheme scheme;
  scheme.descriptors = std::vector<MeasurementDescriptor>{};
  CHECK_THROWS_AS(build_dc_jacobian(two_bus(), scheme), ValidationError);
}

TEST_CASE("explicit descriptors select rows") {
  const GridCase g = parse_grid_json(kTriangle);
  MeasurementScheme scheme;
  scheme.descriptors = std::vector<MeasurementDescriptor>{{MeasurementKind::flow, 2}, {MeasurementKind::injection, 2}};
  const MeasurementModel m = build_dc_jacobian(g, scheme);
  REQUIRE(m.H.rows() == 2);
  // flow 1 -> 3
  CHECK(m.H(0, 0) == doctest::Approx(10.0));
  CHECK(m.H(0, 2) == doctest::Approx(-10.0));
  // injection at bus 2: flows 2->1 and 2->3
  CHECK(m.H(1, 0) == doctest::Approx(-10.0));
  CHECK(m.H(1, 1) == doctest::Approx(20.0));
  CHECK(m.H(1, 2) == doctest::Approx(-10.0));
}

// Reference values from tests/oracles/jacobian_oracle.py (numpy, independent
// Jacobian assembly and SVD).
struct Frozen {
  const char* system;
  Index N, D, rank;
  double zero_fraction;
};

const Frozen kFrozen[] = {
    {"ieee9", 18, 9, 8, 0.72222222222222221},
    {"ieee14", 34, 14, 13, 0.80252100840336138},
    {"ieee30", 71, 30, 29, 0.9089201877934272},
    {"ieee39", 85, 39, 38, 0.93273001508295628},
    {"ieee57", 137, 57, 56, 0.95223460110129343},
    {"ieee118", 304, 118, 117, 0.97636039250669049},
    {"ieee300", 711, 300, 299, 0.99090482887951248},
};

TEST_CASE("structure reports match the numpy oracle") {
  for (const auto& f : kFrozen) {
    CAPTURE(f.system);
    const StructureReport r = structure_report(build_dc_jacobian(load_case(f.system)));
    CHECK(r.measurements == f.N);
    CHECK(r.states == f.D);
    CHECK(r.rank == f.rank);
    CHECK(r.zero_fraction == doctest::Approx(f.zero_fraction).epsilon(1e-14));
  }
}

TEST_CASE("Jacobian structure invariants") {
  for (const auto& f : kFrozen) {
    CAPTURE(f.system);
    const GridCase g = load_case(f.system);
    const MeasurementModel m = build_dc_jacobian(g);
    const Index D = m.states();
    const Index B = static_cast<Index>(g.branches.size());
    REQUIRE(m.measurements() == D + B);

    const double scale = m.H.cwiseAbs().maxCoeff();
    CHECK((m.H * Vector::Ones(D)).cwiseAbs().maxCoeff() <= 1e-12 * scale);

    for (Index r = D; r < D + B; ++r) {
      const auto row = m.H.row(r);
      Index nonzeros = 0;
      double sum = 0.0;
      for (Index c = 0; c < D; ++c) {
        if (row(c) != 0.0) ++nonzeros;
        sum += row(c);
      }
      CHECK(nonzeros == 2);
      CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
    }

    // Injection row i = sum of incident flow rows oriented out of bus i.
    Matrix expected = Matrix::Zero(D, D);
    for (Index b = 0; b < B; ++b) {
      const auto& br = g.branches[static_cast<std::size_t>(b)];
      expected.row(g.bus_column(br.from_bus)) += m.H.row(D + b);
      expected.row(g.bus_column(br.to_bus)) -= m.H.row(D + b);
    }
    CHECK((expected - m.H.topRows(D)).cwiseAbs().maxCoeff() <= 1e-9 * scale);

    CHECK(m.noise_variances.size() == m.measurements());
    CHECK((m.noise_variances.array() - 1e-4).abs().maxCoeff() < 1e-18);
  }
}
