#pragma once

#include "gridsparse/admm.hpp"
#include "gridsparse/partition.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gridsparse {

enum class ExperimentMode {
  tla,
  tsa,
  sla,
  ssa,
  random_attack_detect_distributed,
  random_attack_detect_collaborative,
  distributed_attack,
  collective_attack,
};

std::string to_string(ExperimentMode mode);
ExperimentMode experiment_mode_from_string(const std::string& name);

struct ClusterPolicy {
  enum class Kind { one, prime_divisor_random, fixed };

  Kind kind = Kind::one;
  Index fixed_G = 1;

  static ClusterPolicy one() { return {}; }
  static ClusterPolicy prime_divisor_random() { return {Kind::prime_divisor_random, 1}; }
  static ClusterPolicy fixed(Index G) { return {Kind::fixed, G}; }
};

std::string to_string(const ClusterPolicy& policy);
/// "one", "prime_divisor_random" or "fixed(G)".
ClusterPolicy cluster_policy_from_string(const std::string& text);

struct ExperimentConfig {
  /// ieee9 .. ieee300 or a path to a MATPOWER / JSON case file.
  std::string system = "ieee57";
  ExperimentMode mode = ExperimentMode::random_attack_detect_distributed;
  std::vector<double> k_over_N_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  int realizations = 100;
  double C = 0.5;
  double rho = 1.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-2;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  ClusterPolicy G_policy;
  double noise_sigma = 0.01;
  /// Size of the targeted state set for tla / tsa.
  int targeted_count = 2;
  /// Strategic attacks: lower bound on |c|_inf.
  double psi = 1.0;

  void validate() const;
  SolverConfig solver() const;
};

/// Flat key/value config, either a JSON object or `key = value` lines
/// (values in JSON syntax, `#` comments). Unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentRow {
  double k_over_N = 0.0;
  Index G = 0;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  long n = 0;
};

struct ExperimentResult {
  std::string system;
  std::string mode;
  std::vector<ExperimentRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

/// |H^T v|_inf, the smallest lambda at which the LASSO solution is zero.
double lambda_max(const Matrix& H, const Vector& v);

/// Number of clusters for an axis of length n. prime_divisor_random draws
/// uniformly from the prime divisors of n, or from {1, n} when n is prime.
Index choose_clusters(Index n, const ClusterPolicy& policy, std::mt19937_64& rng);

/// Prime divisors of n, ascending.
std::vector<Index> prime_divisors(Index n);

/// Runs every realization of every grid point. Realization r of grid point
/// g draws from its own stream seeded by (seed, g, r), so the result is a
/// function of the config alone. A realization that throws is counted in a
/// `failed` row for its grid point.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Columns: system,mode,G,k_over_N,metric,mean,std,n,seed.
std::string to_csv(const ExperimentResult& result);
void emit_csv(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace gridsparse
