#pragma once

#include "gridsparse/admm.hpp"
#include "gridsparse/linalg.hpp"
#include "gridsparse/partition.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>

namespace gridsparse {

enum class AttackKind { tla, tsa, sla, ssa, random, distributed, collective };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& name);

/// Attacker knowledge for the targeted and strategic regimes. `targeted`
/// fixes c_j on the targeted state indices; every other state index is
/// off-target. `attacked_meters` lists the meters the attacker controls;
/// the rest are secure.
struct AttackSpec {
  std::map<Index, double> targeted;
  IndexList attacked_meters;
  std::optional<Index> sparsity_k;
  double psi = 0.0;

  IndexList targeted_indices() const;
  IndexList off_target(Index states) const;
  IndexList secure_meters(Index measurements) const;
};

/// False data a (length N) and the state perturbation c (length D) it
/// corresponds to. `residual` is the relative distance of a from range(H).
struct AttackVector {
  AttackKind kind = AttackKind::random;
  Vector a;
  Vector c;
  std::optional<Index> k;
  SolveSummary solver;
  double residual = 0.0;
  /// Strategic attacks only: no candidate kept the secure meters clean.
  bool leak_warning = false;
};

/// P projects onto the span of the off-target columns, B = P - I and
/// y = B b with b = sum over targeted j of h_j c_j.
struct ProjectionPair {
  Matrix P;
  Matrix B;
  Vector y;
};

/// Singular off-target Gram matrices are handled through the
/// pseudoinverse (relative cutoff 1e-10).
ProjectionPair build_projection(const Matrix& H, const IndexList& off_target,
                                const std::map<Index, double>& targeted_values);

/// Replaces the injected data: y = B b.
void set_injected_data(ProjectionPair& pair, const Vector& b);

/// Sparse a from minimize 1/2 |y - B a|^2 + lambda |a|_1; c is the least
/// squares solution of H c = a.
AttackVector targeted_lasso_attack(const Matrix& H, const AttackSpec& spec, const SolverConfig& config);
AttackVector targeted_lasso_attack(const Matrix& H, const ProjectionPair& pair, const SolverConfig& config);

/// As targeted_lasso_attack under the exact constraint |a|_0 <= k.
AttackVector targeted_selective_attack(const Matrix& H, const AttackSpec& spec, const SolverConfig& config);
AttackVector targeted_selective_attack(const Matrix& H, const ProjectionPair& pair, Index k,
                                       const SolverConfig& config);

struct StrategicOptions {
  /// A candidate is leak-free when |H_S c|_inf <= leak_tol.
  double leak_tol = 1e-6;
  /// Attacked rows with |(Hc)_j| <= zero_tol count as untouched.
  double zero_tol = 1e-6;
  /// When set, each per-column solve uses lambda = lambda_scale * |M^T h|_inf
  /// of its own subproblem instead of config.lambda.
  std::optional<double> lambda_scale;
};

/// For every state column i, solves the reduced problem with c_i pinned to
/// 1 and the secure rows driven to zero, refits the selected support by
/// least squares, and keeps the leak-free candidate touching the fewest
/// attacked meters (ties: smaller leak, then lower column). Candidates with
/// H c = 0 are discarded. The winner is scaled so |c|_inf = max(psi, |c|_inf).
AttackVector strategic_lasso_attack(const Matrix& H, const IndexList& secure, double psi, const SolverConfig& config,
                                    const StrategicOptions& options = {});

/// Same search with regressor selection per column: |c|_0 <= k + 1.
AttackVector strategic_selective_attack(const Matrix& H, const IndexList& secure, Index k, double psi,
                                        const SolverConfig& config, const StrategicOptions& options = {});

/// k distinct uniformly drawn indices with i.i.d. Gaussian amplitudes.
AttackVector random_sparse_attack(Index measurements, Index k, double amp_mean, double amp_variance,
                                  std::mt19937_64& rng);
AttackVector random_sparse_attack(Index measurements, Index k, double amp_mean, double amp_variance,
                                  std::uint64_t seed);

/// Sparse c with H c ~ a_target via consensus LASSO over row clusters.
AttackVector distributed_sparse_attack(const Matrix& H, const Vector& a_target, const ClusterPartition& partition,
                                       const SolverConfig& config);

/// Group-sparse c with H c ~ a_target via sharing ADMM over column clusters.
AttackVector collective_sparse_attack(const Matrix& H, const Vector& a_target, const ClusterPartition& groups,
                                      const SolverConfig& config, const InnerSolverConfig& inner = {});

struct ObservabilityCheck {
  bool unobservable = false;
  double residual = 0.0;
};

/// residual = min_c |a - H c| / max(|a|, tiny).
ObservabilityCheck unobservability_check(const Matrix& H, const Vector& a, double tol = 1e-6);

}  // namespace gridsparse
