#include "gridsparse/experiment.hpp"

#include "gridsparse/attack.hpp"
#include "gridsparse/detection.hpp"
#include "gridsparse/error.hpp"
#include "gridsparse/estimation.hpp"
#include "gridsparse/grid_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gridsparse {

using json = nlohmann::json;

namespace {

constexpr std::pair<ExperimentMode, const char*> kModeNames[] = {
    {ExperimentMode::tla, "tla"},
    {ExperimentMode::tsa, "tsa"},
    {ExperimentMode::sla, "sla"},
    {ExperimentMode::ssa, "ssa"},
    {ExperimentMode::random_attack_detect_distributed, "random_attack_detect_distributed"},
    {ExperimentMode::random_attack_detect_collaborative, "random_attack_detect_collaborative"},
    {ExperimentMode::distributed_attack, "distributed_attack"},
    {ExperimentMode::collective_attack, "collective_attack"},
};

}  // namespace

std::string to_string(ExperimentMode mode) {
  for (const auto& [m, name] : kModeNames)
    if (m == mode) return name;
  return "unknown";
}

ExperimentMode experiment_mode_from_string(const std::string& name) {
  for (const auto& [m, n] : kModeNames)
    if (name == n) return m;
  throw ValidationError("unknown experiment mode '" + name + "'");
}

std::string to_string(const ClusterPolicy& policy) {
  switch (policy.kind) {
    case ClusterPolicy::Kind::one: return "one";
    case ClusterPolicy::Kind::prime_divisor_random: return "prime_divisor_random";
    case ClusterPolicy::Kind::fixed: return "fixed(" + std::to_string(policy.fixed_G) + ")";
  }
  return "unknown";
}

ClusterPolicy cluster_policy_from_string(const std::string& text) {
  if (text == "one") return ClusterPolicy::one();
  if (text == "prime_divisor_random") return ClusterPolicy::prime_divisor_random();
  if (text.rfind("fixed(", 0) == 0 && text.back() == ')') {
    const std::string inner = text.substr(6, text.size() - 7);
    try {
      std::size_t used = 0;
      const long G = std::stol(inner, &used);
      if (used == inner.size() && G >= 1) return ClusterPolicy::fixed(G);
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("invalid G_policy '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (k_over_N_grid.empty()) throw ValidationError("k_over_N_grid is empty");
  for (std::size_t i = 0; i < k_over_N_grid.size(); ++i) {
    const double v = k_over_N_grid[i];
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("k_over_N_grid values must lie in [0, 1]");
    if (i > 0 && !(v > k_over_N_grid[i - 1])) throw ValidationError("k_over_N_grid must be strictly increasing");
  }
  if (realizations < 1) throw ValidationError("realizations must be at least 1");
  if (!(C >= 0.0)) throw ValidationError("C must be non-negative");
  if (!(noise_sigma > 0.0)) throw ValidationError("noise_sigma must be positive");
  if (targeted_count < 1) throw ValidationError("targeted_count must be at least 1");
  if (!(psi >= 0.0)) throw ValidationError("psi must be non-negative");
  solver().validate();
}

SolverConfig ExperimentConfig::solver() const { return {rho, 0.0, eps_abs, eps_rel, max_iter}; }

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
  } else {
    doc = json::object();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      auto strip = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      if (strip(line).empty()) continue;
      if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
      std::string key = strip(line.substr(0, eq));
      std::string value = strip(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '\'' && value.back() == '\'')
        value = "\"" + value.substr(1, value.size() - 2) + "\"";
      try {
        doc[key] = json::parse(value);
      } catch (const json::parse_error&) {
        throw ParseError("invalid value for '" + key + "'", line_no);
      }
    }
  }
  if (!doc.is_object()) throw ParseError("config must be a flat object", 0);

  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "system") cfg.system = value.get<std::string>();
      else if (key == "mode") cfg.mode = experiment_mode_from_string(value.get<std::string>());
      else if (key == "k_over_N_grid") cfg.k_over_N_grid = value.get<std::vector<double>>();
      else if (key == "realizations") cfg.realizations = value.get<int>();
      else if (key == "C") cfg.C = value.get<double>();
      else if (key == "rho") cfg.rho = value.get<double>();
      else if (key == "eps_abs") cfg.eps_abs = value.get<double>();
      else if (key == "eps_rel") cfg.eps_rel = value.get<double>();
      else if (key == "max_iter") cfg.max_iter = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "G_policy") cfg.G_policy = cluster_policy_from_string(value.get<std::string>());
      else if (key == "noise_sigma") cfg.noise_sigma = value.get<double>();
      else if (key == "targeted_count") cfg.targeted_count = value.get<int>();
      else if (key == "psi") cfg.psi = value.get<double>();
      else throw ValidationError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

double lambda_max(const Matrix& H, const Vector& v) {
  if (H.rows() != v.size()) throw ValidationError("lambda_max: v has length " + std::to_string(v.size()) +
                                                  ", H has " + std::to_string(H.rows()) + " rows");
  if (H.cols() == 0) return 0.0;
  return (H.transpose() * v).cwiseAbs().maxCoeff();
}

std::vector<Index> prime_divisors(Index n) {
  std::vector<Index> out;
  for (Index p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

Index choose_clusters(Index n, const ClusterPolicy& policy, std::mt19937_64& rng) {
  if (n < 1) throw ValidationError("choose_clusters: n must be positive");
  switch (policy.kind) {
    case ClusterPolicy::Kind::one: return 1;
    case ClusterPolicy::Kind::fixed:
      if (policy.fixed_G < 1 || policy.fixed_G > n)
        throw ValidationError("fixed G=" + std::to_string(policy.fixed_G) + " exceeds n=" + std::to_string(n));
      return policy.fixed_G;
    case ClusterPolicy::Kind::prime_divisor_random: {
      std::vector<Index> options = prime_divisors(n);
      if (options.size() <= 1 && (options.empty() || options.front() == n)) options = {1, n};
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      return options[pick(rng)];
    }
  }
  return 1;
}

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_config(const ExperimentConfig& c) {
  json doc = {{"system", c.system},     {"mode", to_string(c.mode)}, {"k_over_N_grid", c.k_over_N_grid},
              {"realizations", c.realizations}, {"C", c.C},         {"rho", c.rho},
              {"eps_abs", c.eps_abs},  {"eps_rel", c.eps_rel},      {"max_iter", c.max_iter},
              {"seed", c.seed},        {"G_policy", to_string(c.G_policy)}, {"noise_sigma", c.noise_sigma},
              {"targeted_count", c.targeted_count}, {"psi", c.psi}};
  return fnv1a(doc.dump());
}

struct Sample {
  Index G;
  std::string metric;
  double value;
};

struct Setup {
  const ExperimentConfig& config;
  const MeasurementModel& model;
  double tau;
};

double mean_of(const Vector& v) { return v.size() ? v.mean() : 0.0; }

double variance_of(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return (v.array() - v.mean()).square().mean();
}

void push_probabilities(std::vector<Sample>& out, Index G, const Vector& constructed, const Vector& reference) {
  const ConstructionProbabilities p =
      construction_probabilities(std::span<const Vector>(&constructed, 1), std::span<const Vector>(&reference, 1));
  if (p.p_nonzero) out.push_back({G, "p_nonzero", *p.p_nonzero});
  if (p.p_zero) out.push_back({G, "p_zero", *p.p_zero});
}

std::vector<Sample> run_realization(const Setup& s, double k_over_N, std::mt19937_64& rng) {
  const ExperimentConfig& cfg = s.config;
  const Matrix& H = s.model.H;
  const Index N = H.rows();
  const Index D = H.cols();
  const Index k = std::clamp<Index>(static_cast<Index>(std::llround(k_over_N * static_cast<double>(N))), 0, N);

  std::normal_distribution<double> standard(0.0, 1.0);
  Vector x(D);
  for (Index i = 0; i < D; ++i) x(i) = standard(rng);
  Vector noise(N);
  for (Index i = 0; i < N; ++i) noise(i) = cfg.noise_sigma * standard(rng);
  const Vector z = H * x + noise;
  const Vector a_ref = random_sparse_attack(N, k, mean_of(z), variance_of(z), rng).a;
  const IndexList attacked = linalg::support(a_ref);

  SolverConfig solver = cfg.solver();
  std::vector<Sample> out;

  switch (cfg.mode) {
    case ExperimentMode::random_attack_detect_distributed:
    case ExperimentMode::random_attack_detect_collaborative: {
      const bool rows = cfg.mode == ExperimentMode::random_attack_detect_distributed;
      const MeasurementSnapshot snapshot{z + a_ref, std::nullopt};
      solver.lambda = cfg.C * lambda_max(H, snapshot.z);
      const Index G = choose_clusters(rows ? N : D, cfg.G_policy, rng);
      StateEstimate est =
          rows ? distributed_state_estimate(s.model, snapshot, partition_indices(N, G), solver)
               : collaborative_state_estimate(s.model, snapshot,
                                              partition_indices(D, G, ClusterPartition::Axis::columns), solver);
      const DetectionResult det = run_detection(H, snapshot.z, est.x_hat, s.tau);
      const MetricBundle m = metrics(confusion(det.attacked_mask, attacked));
      if (m.precision) out.push_back({G, "precision", *m.precision});
      if (m.recall) out.push_back({G, "recall", *m.recall});
      if (m.accuracy) out.push_back({G, "accuracy", *m.accuracy});
      out.push_back({G, "converged", est.solver.converged ? 1.0 : 0.0});
      break;
    }
    case ExperimentMode::tla:
    case ExperimentMode::tsa: {
      IndexList all(static_cast<std::size_t>(D));
      std::iota(all.begin(), all.end(), Index{0});
      std::shuffle(all.begin(), all.end(), rng);
      const Index targeted = std::min<Index>(cfg.targeted_count, D - 1);
      IndexList off(all.begin() + targeted, all.end());
      std::sort(off.begin(), off.end());
      ProjectionPair pair = build_projection(H, off, {});
      set_injected_data(pair, a_ref);
      AttackVector attack;
      if (cfg.mode == ExperimentMode::tla) {
        solver.lambda = cfg.C * lambda_max(pair.B, pair.y);
        attack = targeted_lasso_attack(H, pair, solver);
      } else {
        attack = targeted_selective_attack(H, pair, k, solver);
      }
      push_probabilities(out, 1, attack.a, a_ref);
      out.push_back({1, "converged", attack.solver.converged ? 1.0 : 0.0});
      break;
    }
    case ExperimentMode::sla:
    case ExperimentMode::ssa: {
      const IndexList secure = linalg::complement(N, attacked);
      StrategicOptions options;
      options.lambda_scale = cfg.C;
      AttackVector attack;
      if (cfg.mode == ExperimentMode::sla) {
        attack = strategic_lasso_attack(H, secure, cfg.psi, solver, options);
      } else {
        const Index k_state =
            std::clamp<Index>(static_cast<Index>(std::llround(k_over_N * static_cast<double>(D - 1))), 0, D - 1);
        attack = strategic_selective_attack(H, secure, k_state, cfg.psi, solver, options);
      }
      push_probabilities(out, 1, attack.a, a_ref);
      out.push_back({1, "leak_free", attack.leak_warning ? 0.0 : 1.0});
      out.push_back({1, "converged", attack.solver.converged ? 1.0 : 0.0});
      break;
    }
    case ExperimentMode::distributed_attack:
    case ExperimentMode::collective_attack: {
      const bool rows = cfg.mode == ExperimentMode::distributed_attack;
      solver.lambda = cfg.C * lambda_max(H, a_ref);
      const Index G = choose_clusters(rows ? N : D, cfg.G_policy, rng);
      AttackVector attack =
          rows ? distributed_sparse_attack(H, a_ref, partition_indices(N, G), solver)
               : collective_sparse_attack(H, a_ref, partition_indices(D, G, ClusterPartition::Axis::columns), solver);
      push_probabilities(out, G, attack.a, a_ref);
      const Vector error = (a_ref - attack.a).array().square();
      out.push_back({G, "error", error.mean()});
      out.push_back({G, "converged", attack.solver.converged ? 1.0 : 0.0});
      break;
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const GridCase grid_case = load_case(config.system);
  MeasurementScheme scheme;
  scheme.noise_sigma = config.noise_sigma;
  const MeasurementModel model = build_dc_jacobian(grid_case, scheme);
  const Setup setup{config, model, tau_threshold(model, config.noise_sigma)};

  ExperimentResult result;
  result.system = config.system;
  result.mode = to_string(config.mode);
  result.config_hash = hash_config(config);
  result.seed = config.seed;

  for (std::size_t g = 0; g < config.k_over_N_grid.size(); ++g) {
    const double k_over_N = config.k_over_N_grid[g];
    // (G, metric) -> values in realization order.
    std::map<std::pair<Index, std::string>, std::vector<double>> samples;
    long failures = 0;
    for (int r = 0; r < config.realizations; ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                        static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      try {
        for (auto& sample : run_realization(setup, k_over_N, rng))
          samples[{sample.G, sample.metric}].push_back(sample.value);
      } catch (const Error&) {
        ++failures;
      }
    }
    for (auto& [key, values] : samples) {
      // Sorting makes the reduction independent of realization order.
      std::sort(values.begin(), values.end());
      const double n = static_cast<double>(values.size());
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double std = values.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
      result.rows.push_back({k_over_N, key.first, key.second, mean, std, static_cast<long>(values.size())});
    }
    if (failures > 0)
      result.rows.push_back({k_over_N, 0, "failed", static_cast<double>(failures), 0.0, config.realizations});
  }
  return result;
}

std::string to_csv(const ExperimentResult& result) {
  std::string out = "system,mode,G,k_over_N,metric,mean,std,n,seed\n";
  char buffer[512];
  for (const auto& row : result.rows) {
    std::snprintf(buffer, sizeof(buffer), "%s,%s,%ld,%.6g,%s,%.10g,%.10g,%ld,%llu\n", result.system.c_str(),
                  result.mode.c_str(), static_cast<long>(row.G), row.k_over_N, row.metric.c_str(), row.mean, row.std,
                  row.n, static_cast<unsigned long long>(result.seed));
    out += buffer;
  }
  return out;
}

void emit_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_csv(result);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gridsparse
