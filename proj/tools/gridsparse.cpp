#include "gridsparse/attack.hpp"
#include "gridsparse/detection.hpp"
#include "gridsparse/error.hpp"
#include "gridsparse/estimation.hpp"
#include "gridsparse/experiment.hpp"
#include "gridsparse/grid_model.hpp"
#include "gridsparse/json_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

using namespace gridsparse;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kNotConverged = 2, kIo = 3 };

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_output(const json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

Index resolve_k(std::optional<Index> k, std::optional<double> kn, Index n) {
  if (k && kn) throw ValidationError("--k and --kn are mutually exclusive");
  Index value = 0;
  if (k) value = *k;
  else if (kn) value = static_cast<Index>(std::llround(*kn * static_cast<double>(n)));
  else value = std::max<Index>(1, n / 10);
  if (value < 0 || value > n) throw ValidationError("k=" + std::to_string(value) + " outside [0, " + std::to_string(n) + "]");
  return value;
}

struct AttackOptions {
  std::string kind;
  std::string case_path;
  std::optional<Index> k;
  std::optional<double> kn;
  double psi = 1.0;
  Index G = 1;
  std::uint64_t seed = 0;
  std::string out;
  double C = 0.5;
  int max_iter = SolverConfig{}.max_iter;
  std::vector<std::string> targets;
};

std::map<Index, double> parse_targets(const std::vector<std::string>& items, Index D, std::mt19937_64& rng) {
  std::map<Index, double> targeted;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    try {
      const Index idx = std::stol(item.substr(0, eq));
      const double value = eq == std::string::npos ? 1.0 : std::stod(item.substr(eq + 1));
      if (idx < 0 || idx >= D) throw ValidationError("target index " + std::to_string(idx) + " out of range");
      targeted[idx] = value;
    } catch (const std::logic_error&) {
      throw ValidationError("invalid --target '" + item + "', expected index=value");
    }
  }
  if (targeted.empty()) {
    IndexList all(static_cast<std::size_t>(D));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), rng);
    for (Index i = 0; i < std::min<Index>(2, D - 1); ++i) targeted[all[static_cast<std::size_t>(i)]] = 1.0;
  }
  return targeted;
}

int run_attack(const AttackOptions& o) {
  const MeasurementModel model = build_dc_jacobian(load_case(o.case_path));
  const Matrix& H = model.H;
  const Index N = H.rows();
  const Index D = H.cols();
  std::mt19937_64 rng(o.seed);
  SolverConfig cfg;
  cfg.max_iter = o.max_iter;
  AttackVector attack;
  const AttackKind kind = attack_kind_from_string(o.kind);

  if (kind == AttackKind::tla || kind == AttackKind::tsa) {
    AttackSpec spec;
    spec.targeted = parse_targets(o.targets, D, rng);
    if (kind == AttackKind::tla) {
      const ProjectionPair pair = build_projection(H, spec.off_target(D), spec.targeted);
      cfg.lambda = o.C * lambda_max(pair.B, pair.y);
      attack = targeted_lasso_attack(H, pair, cfg);
    } else {
      spec.sparsity_k = resolve_k(o.k, o.kn, N);
      attack = targeted_selective_attack(H, spec, cfg);
    }
  } else if (kind == AttackKind::sla || kind == AttackKind::ssa) {
    // k attacked meters drawn at random; everything else is secure.
    const Index k = resolve_k(o.k, o.kn, N);
    const IndexList attacked = linalg::support(random_sparse_attack(N, k, 1.0, 1.0, rng).a);
    const IndexList secure = linalg::complement(N, attacked);
    StrategicOptions options;
    options.lambda_scale = o.C;
    attack = kind == AttackKind::sla ? strategic_lasso_attack(H, secure, o.psi, cfg, options)
                                     : strategic_selective_attack(H, secure, std::max<Index>(1, k * (D - 1) / N), o.psi,
                                                                  cfg, options);
  } else if (kind == AttackKind::distributed || kind == AttackKind::collective) {
    const Index k = resolve_k(o.k, o.kn, N);
    const Vector target = random_sparse_attack(N, k, 0.0, 1.0, rng).a;
    cfg.lambda = o.C * lambda_max(H, target);
    attack = kind == AttackKind::distributed
                 ? distributed_sparse_attack(H, target, partition_indices(N, o.G), cfg)
                 : collective_sparse_attack(H, target, partition_indices(D, o.G, ClusterPartition::Axis::columns), cfg);
  } else {
    throw ValidationError("unsupported attack kind '" + o.kind + "'");
  }

  json doc = to_json(attack);
  doc["leak_warning"] = attack.leak_warning;
  write_output(doc, o.out);
  return attack.solver.converged ? kOk : kNotConverged;
}

int run_estimate(const std::string& method, const std::string& case_path, const std::string& z_path, Index G,
                 double C, int max_iter, const std::string& out) {
  const MeasurementModel model = build_dc_jacobian(load_case(case_path));
  const MeasurementSnapshot snapshot{vector_from_json(read_json_file(z_path), "z"), std::nullopt};
  if (snapshot.z.size() != model.measurements())
    throw ValidationError("z has length " + std::to_string(snapshot.z.size()) + ", model has " +
                          std::to_string(model.measurements()) + " measurements");
  SolverConfig cfg;
  cfg.max_iter = max_iter;
  cfg.lambda = C * lambda_max(model.H, snapshot.z);
  StateEstimate estimate;
  if (method == "wls") {
    estimate = wls_estimate(model, snapshot);
  } else if (method == "distributed") {
    estimate = distributed_state_estimate(model, snapshot, partition_indices(model.measurements(), G), cfg);
  } else if (method == "collaborative") {
    estimate = collaborative_state_estimate(
        model, snapshot, partition_indices(model.states(), G, ClusterPartition::Axis::columns), cfg);
  } else {
    throw ValidationError("unknown estimation method '" + method + "'");
  }
  write_output(to_json(estimate), out);
  return estimate.solver.converged ? kOk : kNotConverged;
}

int run_detect(const std::string& case_path, const std::string& z_path, const std::string& xhat_path, double sigma,
               const std::string& out) {
  MeasurementScheme scheme;
  scheme.noise_sigma = sigma;
  const MeasurementModel model = build_dc_jacobian(load_case(case_path), scheme);
  const Vector z = vector_from_json(read_json_file(z_path), "z");
  const Vector x_hat = vector_from_json(read_json_file(xhat_path), "x_hat");
  if (z.size() != model.measurements() || x_hat.size() != model.states())
    throw ValidationError("z / x_hat lengths do not match the case");
  const DetectionResult result = run_detection(model.H, z, x_hat, tau_threshold(model, sigma));
  write_output(to_json(result), out);
  return kOk;
}

int run_grid_info(const std::string& case_path) {
  const GridCase grid_case = load_case(case_path);
  const MeasurementModel model = build_dc_jacobian(grid_case);
  const StructureReport report = structure_report(model);
  json doc = {{"name", grid_case.name},
              {"buses", grid_case.buses.size()},
              {"branches", grid_case.branches.size()},
              {"measurements", report.measurements},
              {"states", report.states},
              {"rank", report.rank},
              {"zero_fraction", report.zero_fraction}};
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse attack construction and distributed state estimation on DC grid models"};
  app.require_subcommand(1);

  auto* grid = app.add_subcommand("grid", "Grid case utilities");
  grid->require_subcommand(1);
  auto* info = grid->add_subcommand("info", "Print measurement model dimensions");
  std::string info_case;
  info->add_option("case", info_case, "ieee9..ieee300 or a case file")->required();

  AttackOptions attack;
  auto* attack_cmd = app.add_subcommand("attack", "Construct an attack vector");
  attack_cmd->add_option("kind", attack.kind, "tla|tsa|sla|ssa|distributed|collective")
      ->required()
      ->check(CLI::IsMember({"tla", "tsa", "sla", "ssa", "distributed", "collective"}));
  attack_cmd->add_option("--case", attack.case_path)->required();
  attack_cmd->add_option("--k", attack.k, "Sparsity / attacked meter count");
  attack_cmd->add_option("--kn", attack.kn, "Sparsity as a fraction of N");
  attack_cmd->add_option("--psi", attack.psi, "Lower bound on |c|_inf (strategic)");
  attack_cmd->add_option("--G", attack.G, "Cluster count (distributed, collective)");
  attack_cmd->add_option("--seed", attack.seed);
  attack_cmd->add_option("--C", attack.C, "lambda = C * lambda_max");
  attack_cmd->add_option("--max-iter", attack.max_iter, "ADMM iteration limit");
  attack_cmd->add_option("--target", attack.targets, "Targeted state index=value (tla, tsa)");
  attack_cmd->add_option("--out", attack.out, "Output JSON path (default stdout)");

  std::string est_method, est_case, est_z, est_out;
  Index est_G = 1;
  double est_C = 0.5;
  int est_max_iter = SolverConfig{}.max_iter;
  auto* estimate = app.add_subcommand("estimate", "Estimate the state from a measurement vector");
  estimate->add_option("method", est_method, "wls|distributed|collaborative")
      ->required()
      ->check(CLI::IsMember({"wls", "distributed", "collaborative"}));
  estimate->add_option("--case", est_case)->required();
  estimate->add_option("--z", est_z, "JSON array or {\"z\": [...]}")->required();
  estimate->add_option("--G", est_G);
  estimate->add_option("--C", est_C, "lambda = C * lambda_max");
  estimate->add_option("--max-iter", est_max_iter, "ADMM iteration limit");
  estimate->add_option("--out", est_out);

  std::string det_case, det_z, det_xhat, det_out;
  double det_sigma = 0.01;
  auto* detect_cmd = app.add_subcommand("detect", "Residual test on a measurement vector and estimate");
  detect_cmd->add_option("--case", det_case)->required();
  detect_cmd->add_option("--z", det_z)->required();
  detect_cmd->add_option("--xhat", det_xhat)->required();
  detect_cmd->add_option("--sigma", det_sigma);
  detect_cmd->add_option("--out", det_out);

  std::string exp_config, exp_out;
  auto* experiment = app.add_subcommand("experiment", "Run a Monte-Carlo sweep");
  experiment->add_option("--config", exp_config)->required();
  experiment->add_option("--out", exp_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*grid) return run_grid_info(info_case);
    if (*attack_cmd) return run_attack(attack);
    if (*estimate) return run_estimate(est_method, est_case, est_z, est_G, est_C, est_max_iter, est_out);
    if (*detect_cmd) return run_detect(det_case, det_z, det_xhat, det_sigma, det_out);
    if (*experiment) {
      const ExperimentResult result = run_experiment(load_experiment_config(exp_config));
      emit_csv(result, exp_out);
      return kOk;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
