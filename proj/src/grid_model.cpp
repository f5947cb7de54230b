#include "gridsparse/grid_model.hpp"

#include "gridsparse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gridsparse {

using json = nlohmann::json;

void GridCase::validate() const {
  if (buses.empty()) throw ValidationError("case '" + name + "' has no buses");
  if (!(base_mva > 0.0)) throw ValidationError("base_mva must be positive");

  std::unordered_map<int, Index> column;
  int reference_count = 0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!column.emplace(buses[i].id, static_cast<Index>(i)).second)
      throw ValidationError("duplicate bus id " + std::to_string(buses[i].id));
    if (buses[i].is_reference) ++reference_count;
  }
  if (reference_count != 1)
    throw ValidationError("expected exactly one reference bus, found " + std::to_string(reference_count));

  std::vector<std::vector<Index>> adjacency(buses.size());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const Branch& br = branches[b];
    const std::string label = "branch " + std::to_string(b) + " (" + std::to_string(br.from_bus) + "-" +
                              std::to_string(br.to_bus) + ")";
    auto from = column.find(br.from_bus);
    auto to = column.find(br.to_bus);
    if (from == column.end())
      throw ValidationError(label + " references unknown bus " + std::to_string(br.from_bus));
    if (to == column.end()) throw ValidationError(label + " references unknown bus " + std::to_string(br.to_bus));
    if (br.reactance == 0.0 || !std::isfinite(br.reactance))
      throw ValidationError(label + " has zero or non-finite reactance");
    if (from->second == to->second) throw ValidationError(label + " is a self-loop");
    adjacency[static_cast<std::size_t>(from->second)].push_back(to->second);
    adjacency[static_cast<std::size_t>(to->second)].push_back(from->second);
  }

  std::vector<bool> seen(buses.size(), false);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    Index u = frontier.front();
    frontier.pop();
    for (Index v : adjacency[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        frontier.push(v);
      }
    }
  }
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (!seen[i])
      throw ValidationError("branch graph is disconnected: bus " + std::to_string(buses[i].id) +
                            " is unreachable from bus " + std::to_string(buses[0].id));
}

Index GridCase::bus_column(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<Index>(i);
  throw ValidationError("unknown bus id " + std::to_string(id));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, int line) {
  double value = 0.0;
  // from_chars rejects a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("invalid number '" + std::string(token) + "'", line);
  return value;
}

int parse_id(double value, int line) {
  if (value != std::floor(value) || std::abs(value) > 1e9)
    throw ParseError("bus id " + std::to_string(value) + " is not an integer", line);
  return static_cast<int>(value);
}

struct MatrixRow {
  std::vector<double> values;
  int line = 0;
};

// Line-oriented reader for the `mpc.<field> = [ ... ];` subset.
class MatpowerReader {
 public:
  explicit MatpowerReader(std::string_view text) : text_(text) {}

  void run() {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      std::size_t end = text_.find('\n', pos);
      if (end == std::string_view::npos) end = text_.size();
      ++line_no;
      std::string_view line = text_.substr(pos, end - pos);
      if (auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
      process_line(line, line_no);
      pos = end + 1;
    }
    if (current_) throw ParseError("unterminated matrix mpc." + *current_, open_line_);
  }

  std::map<std::string, std::vector<MatrixRow>> matrices;
  std::optional<double> base_mva;
  std::string function_name;

 private:
  void process_line(std::string_view line, int line_no) {
    if (!current_) {
      std::string_view t = trim(line);
      if (t.rfind("function", 0) == 0) {
        if (auto eq = t.find('='); eq != std::string_view::npos) function_name = std::string(trim(t.substr(eq + 1)));
        return;
      }
    }
    while (!line.empty()) {
      if (!current_) {
        auto at = line.find("mpc.");
        if (at == std::string_view::npos) return;
        line.remove_prefix(at + 4);
        std::size_t n = 0;
        while (n < line.size() && (std::isalnum(static_cast<unsigned char>(line[n])) || line[n] == '_')) ++n;
        std::string field(line.substr(0, n));
        line = trim(line.substr(n));
        if (line.empty() || line.front() != '=') throw ParseError("expected '=' after mpc." + field, line_no);
        line = trim(line.substr(1));
        if (!line.empty() && line.front() == '[') {
          current_ = field;
          open_line_ = line_no;
          matrices[field];
          line.remove_prefix(1);
          continue;
        }
        auto semi = line.find(';');
        std::string_view value = trim(line.substr(0, semi));
        if (field == "baseMVA") base_mva = parse_number(value, line_no);
        if (semi == std::string_view::npos) return;
        line.remove_prefix(semi + 1);
        continue;
      }
      // Inside a matrix literal.
      const bool keep = *current_ == "bus" || *current_ == "branch";
      std::size_t i = 0;
      while (i < line.size()) {
        char ch = line[i];
        if (ch == ']') {
          flush_row(line_no);
          current_.reset();
          line.remove_prefix(i + 1);
          if (auto semi = line.find_first_not_of(" \t\r;"); semi == std::string_view::npos) line = {};
          i = 0;
          break;
        }
        if (ch == ';') {
          flush_row(line_no);
          ++i;
          continue;
        }
        if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' && line[j] != ';' &&
               line[j] != ']' && line[j] != '\r')
          ++j;
        if (keep) {
          row_.values.push_back(parse_number(line.substr(i, j - i), line_no));
          row_.line = line_no;
        }
        i = j;
      }
      if (current_) {
        // A newline also terminates a row.
        flush_row(line_no);
        return;
      }
    }
  }

  void flush_row(int) {
    if (!row_.values.empty()) matrices[*current_].push_back(std::move(row_));
    row_ = {};
  }

  std::string_view text_;
  std::optional<std::string> current_;
  int open_line_ = 0;
  MatrixRow row_;
};

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

GridCase parse_matpower(std::string_view text, std::string name) {
  MatpowerReader reader(text);
  reader.run();

  auto bus_it = reader.matrices.find("bus");
  auto branch_it = reader.matrices.find("branch");
  if (bus_it == reader.matrices.end()) throw ParseError("missing mpc.bus matrix", 0);
  if (branch_it == reader.matrices.end()) throw ParseError("missing mpc.branch matrix", 0);

  GridCase out;
  out.name = !name.empty() ? std::move(name) : reader.function_name;
  out.base_mva = reader.base_mva.value_or(100.0);
  for (const auto& row : bus_it->second) {
    if (row.values.size() < 2) throw ParseError("mpc.bus row needs at least 2 columns", row.line);
    out.buses.push_back({parse_id(row.values[0], row.line), row.values[1] == 3.0});
  }
  for (const auto& row : branch_it->second) {
    if (row.values.size() < 4) throw ParseError("mpc.branch row needs at least 4 columns", row.line);
    out.branches.push_back({parse_id(row.values[0], row.line), parse_id(row.values[1], row.line), row.values[3]});
  }
  out.validate();
  return out;
}

GridCase parse_grid_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  GridCase out;
  try {
    out.name = doc.value("name", std::string{});
    out.base_mva = doc.value("base_mva", 100.0);
    for (const auto& b : doc.at("buses")) out.buses.push_back({b.at("id").get<int>(), b.value("reference", false)});
    for (const auto& br : doc.at("branches"))
      out.branches.push_back({br.at("from").get<int>(), br.at("to").get<int>(), br.at("x").get<double>()});
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid json: ") + e.what(), 0);
  }
  out.validate();
  return out;
}

GridCase parse_case(std::string_view text, std::string name) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_grid_json(text);
  return parse_matpower(text, std::move(name));
}

GridCase load_case(const std::string& path_or_system) {
  static const std::map<std::string, std::string> bundled = {
      {"ieee9", "case9.m"},   {"ieee14", "case14.m"},   {"ieee30", "case30.m"},  {"ieee39", "case39.m"},
      {"ieee57", "case57.m"}, {"ieee118", "case118.m"}, {"ieee300", "case300.m"}};
  std::filesystem::path path = path_or_system;
  if (auto it = bundled.find(path_or_system); it != bundled.end()) {
    const char* env = std::getenv("GRIDSPARSE_DATA_DIR");
    path = std::filesystem::path(env ? env : GRIDSPARSE_DATA_DIR) / it->second;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open case file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str(), path.stem().string());
}

std::string to_grid_json(const GridCase& grid_case) {
  json doc;
  doc["name"] = grid_case.name;
  doc["base_mva"] = grid_case.base_mva;
  doc["buses"] = json::array();
  for (const auto& b : grid_case.buses) doc["buses"].push_back({{"id", b.id}, {"reference", b.is_reference}});
  doc["branches"] = json::array();
  for (const auto& br : grid_case.branches)
    doc["branches"].push_back({{"from", br.from_bus}, {"to", br.to_bus}, {"x", br.reactance}});
  return doc.dump(2);
}

MeasurementScheme MeasurementScheme::flows_only(const GridCase& grid_case) {
  MeasurementScheme scheme;
  scheme.descriptors.emplace();
  for (std::size_t b = 0; b < grid_case.branches.size(); ++b)
    scheme.descriptors->push_back({MeasurementKind::flow, static_cast<int>(b)});
  return scheme;
}

MeasurementModel build_dc_jacobian(const GridCase& grid_case, const MeasurementScheme& scheme) {
  std::vector<MeasurementDescriptor> descriptors;
  if (scheme.descriptors) {
    descriptors = *scheme.descriptors;
    if (descriptors.empty()) throw ValidationError("measurement scheme has an empty descriptor list");
  } else {
    for (const auto& b : grid_case.buses) descriptors.push_back({MeasurementKind::injection, b.id});
    for (std::size_t b = 0; b < grid_case.branches.size(); ++b)
      descriptors.push_back({MeasurementKind::flow, static_cast<int>(b)});
  }
  if (!(scheme.noise_sigma > 0.0)) throw ValidationError("noise_sigma must be positive");

  const Index D = static_cast<Index>(grid_case.buses.size());
  const Index branch_count = static_cast<Index>(grid_case.branches.size());
  std::unordered_map<int, Index> column;
  for (Index i = 0; i < D; ++i) column[grid_case.buses[static_cast<std::size_t>(i)].id] = i;
  auto column_of = [&](int id) {
    auto it = column.find(id);
    if (it == column.end()) throw ValidationError("unknown bus id " + std::to_string(id));
    return it->second;
  };

  Matrix flows = Matrix::Zero(branch_count, D);
  for (Index b = 0; b < branch_count; ++b) {
    const Branch& br = grid_case.branches[static_cast<std::size_t>(b)];
    const double susceptance = 1.0 / br.reactance;
    flows(b, column_of(br.from_bus)) += susceptance;
    flows(b, column_of(br.to_bus)) -= susceptance;
  }

  MeasurementModel model;
  model.H = Matrix::Zero(static_cast<Index>(descriptors.size()), D);
  for (std::size_t r = 0; r < descriptors.size(); ++r) {
    const auto& d = descriptors[r];
    const Index row = static_cast<Index>(r);
    if (d.kind == MeasurementKind::flow) {
      if (d.element < 0 || d.element >= branch_count)
        throw ValidationError("flow descriptor references unknown branch " + std::to_string(d.element));
      model.H.row(row) = flows.row(d.element);
    } else {
      const Index bus = column_of(d.element);
      for (Index b = 0; b < branch_count; ++b) {
        const Branch& br = grid_case.branches[static_cast<std::size_t>(b)];
        if (column_of(br.from_bus) == bus) model.H.row(row) += flows.row(b);
        if (column_of(br.to_bus) == bus) model.H.row(row) -= flows.row(b);
      }
    }
  }
  model.descriptors = std::move(descriptors);
  model.noise_variances = Vector::Constant(model.H.rows(), scheme.noise_sigma * scheme.noise_sigma);
  return model;
}

StructureReport structure_report(const MeasurementModel& model, double rank_tolerance) {
  if (!(rank_tolerance > 0.0)) throw ValidationError("rank_tolerance must be positive");
  StructureReport report;
  report.measurements = model.H.rows();
  report.states = model.H.cols();
  if (model.H.size() == 0) return report;
  Eigen::BDCSVD<Matrix> svd(model.H);
  const Vector& s = svd.singularValues();
  if (s(0) > 0.0)
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > rank_tolerance * s(0)) ++report.rank;
  report.zero_fraction =
      static_cast<double>((model.H.array() == 0.0).count()) / static_cast<double>(model.H.size());
  return report;
}

}  // namespace gridsparse
