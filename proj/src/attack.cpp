#include "gridsparse/attack.hpp"

#include "gridsparse/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gridsparse {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::tla: return "tla";
    case AttackKind::tsa: return "tsa";
    case AttackKind::sla: return "sla";
    case AttackKind::ssa: return "ssa";
    case AttackKind::random: return "random";
    case AttackKind::distributed: return "distributed";
    case AttackKind::collective: return "collective";
  }
  return "unknown";
}

AttackKind attack_kind_from_string(const std::string& name) {
  for (auto kind : {AttackKind::tla, AttackKind::tsa, AttackKind::sla, AttackKind::ssa, AttackKind::random,
                    AttackKind::distributed, AttackKind::collective})
    if (to_string(kind) == name) return kind;
  throw ValidationError("unknown attack kind '" + name + "'");
}

IndexList AttackSpec::targeted_indices() const {
  IndexList out;
  for (const auto& [j, value] : targeted) out.push_back(j);
  return out;
}

IndexList AttackSpec::off_target(Index states) const { return linalg::complement(states, targeted_indices()); }

IndexList AttackSpec::secure_meters(Index measurements) const {
  return linalg::complement(measurements, attacked_meters);
}

ObservabilityCheck unobservability_check(const Matrix& H, const Vector& a, double tol) {
  if (!(tol > 0.0)) throw ValidationError("unobservability_check: tol must be positive");
  if (a.size() != H.rows()) throw ValidationError("unobservability_check: a has wrong length");
  const Vector fitted = H * linalg::min_norm_solve(H, a);
  const double residual = (a - fitted).norm() / std::max(a.norm(), std::numeric_limits<double>::min());
  return {residual <= tol, residual};
}

namespace {

AttackVector finish(AttackKind kind, const Matrix& H, Vector a, Vector c, const SolveResult& solve) {
  AttackVector out;
  out.kind = kind;
  out.a = std::move(a);
  out.c = std::move(c);
  out.solver = summarize(solve);
  out.residual = unobservability_check(H, out.a).residual;
  return out;
}

void check_projection_inputs(const Matrix& H, const IndexList& off_target) {
  if (off_target.empty()) throw ValidationError("build_projection: off-target set is empty");
  for (Index j : off_target)
    if (j < 0 || j >= H.cols()) throw ValidationError("build_projection: off-target index out of range");
}

}  // namespace

ProjectionPair build_projection(const Matrix& H, const IndexList& off_target,
                                const std::map<Index, double>& targeted_values) {
  check_projection_inputs(H, off_target);
  ProjectionPair pair;
  pair.P = linalg::column_space_projector(linalg::select_columns(H, off_target));
  pair.B = pair.P - Matrix::Identity(H.rows(), H.rows());
  Vector b = Vector::Zero(H.rows());
  for (const auto& [j, value] : targeted_values) {
    if (j < 0 || j >= H.cols()) throw ValidationError("build_projection: targeted index out of range");
    b += value * H.col(j);
  }
  pair.y = pair.B * b;
  return pair;
}

void set_injected_data(ProjectionPair& pair, const Vector& b) {
  if (b.size() != pair.B.cols()) throw ValidationError("set_injected_data: b has wrong length");
  pair.y = pair.B * b;
}

AttackVector targeted_lasso_attack(const Matrix& H, const ProjectionPair& pair, const SolverConfig& config) {
  SolveResult solve = lasso_admm(pair.B, pair.y, config);
  Vector c = linalg::min_norm_solve(H, solve.solution);
  return finish(AttackKind::tla, H, solve.solution, std::move(c), solve);
}

AttackVector targeted_lasso_attack(const Matrix& H, const AttackSpec& spec, const SolverConfig& config) {
  if (spec.targeted.empty()) throw ValidationError("targeted attack: no targeted state indices");
  return targeted_lasso_attack(H, build_projection(H, spec.off_target(H.cols()), spec.targeted), config);
}

AttackVector targeted_selective_attack(const Matrix& H, const ProjectionPair& pair, Index k,
                                       const SolverConfig& config) {
  if (k < 0 || k > H.rows()) throw ValidationError("targeted selective attack: k out of range");
  SolveResult solve = regressor_selection_admm(pair.B, pair.y, k, config);
  Vector c = linalg::min_norm_solve(H, solve.solution);
  AttackVector out = finish(AttackKind::tsa, H, solve.solution, std::move(c), solve);
  out.k = k;
  return out;
}

AttackVector targeted_selective_attack(const Matrix& H, const AttackSpec& spec, const SolverConfig& config) {
  if (spec.targeted.empty()) throw ValidationError("targeted attack: no targeted state indices");
  if (!spec.sparsity_k) throw ValidationError("targeted selective attack: sparsity_k not set");
  return targeted_selective_attack(H, build_projection(H, spec.off_target(H.cols()), spec.targeted),
                                   *spec.sparsity_k, config);
}

namespace {

struct Candidate {
  Index column = -1;
  Vector c;
  double leak = std::numeric_limits<double>::infinity();
  Index attacked_rows = 0;
  SolveSummary solver;
};

// Least squares refit of M sigma = target on the support of sigma.
Vector refit_on_support(const Matrix& M, const Vector& target, const Vector& sigma) {
  const IndexList support = linalg::support(sigma);
  Vector out = Vector::Zero(sigma.size());
  if (support.empty()) return out;
  const Vector coef = linalg::min_norm_solve(linalg::select_columns(M, support), target);
  for (std::size_t j = 0; j < support.size(); ++j) out(support[j]) = coef(static_cast<Index>(j));
  return out;
}

template <class Solve>
AttackVector strategic_search(AttackKind kind, const Matrix& H, const IndexList& secure, double psi,
                              const StrategicOptions& options, Solve&& solve) {
  if (!(psi >= 0.0)) throw ValidationError("strategic attack: psi must be non-negative");
  const Index N = H.rows();
  const Index D = H.cols();
  if (D < 2) throw ValidationError("strategic attack: need at least two state variables");
  IndexList sorted_secure = secure;
  std::sort(sorted_secure.begin(), sorted_secure.end());
  const IndexList attacked = linalg::complement(N, sorted_secure);
  const Matrix H_S = linalg::select_rows(H, sorted_secure);

  auto better = [](const Candidate& x, const Candidate& y, double leak_tol) {
    const bool x_ok = x.leak <= leak_tol, y_ok = y.leak <= leak_tol;
    if (x_ok != y_ok) return x_ok;
    if (!x_ok) return x.leak < y.leak || (x.leak == y.leak && x.column < y.column);
    if (x.attacked_rows != y.attacked_rows) return x.attacked_rows < y.attacked_rows;
    if (x.leak != y.leak) return x.leak < y.leak;
    return x.column < y.column;
  };

  std::optional<Candidate> best;
  for (Index i = 0; i < D; ++i) {
    IndexList others;
    for (Index j = 0; j < D; ++j)
      if (j != i) others.push_back(j);

    Candidate cand;
    cand.column = i;
    Vector sigma = Vector::Zero(D - 1);
    if (!sorted_secure.empty()) {
      const Matrix M = linalg::select_columns(H_S, others);
      const Vector target = -H_S.col(i);
      SolveResult r = solve(M, target);
      sigma = r.solution;
      cand.solver = summarize(r);
    } else {
      cand.solver = {true, 0};
    }
    cand.c = Vector::Zero(D);
    cand.c(i) = 1.0;
    for (Index j = 0; j < D - 1; ++j) cand.c(others[static_cast<std::size_t>(j)]) = sigma(j);

    const Vector Hc = H * cand.c;
    if (Hc.cwiseAbs().maxCoeff() <= options.zero_tol) continue;  // null-space direction, no attack
    cand.leak = sorted_secure.empty() ? 0.0 : (H_S * cand.c).cwiseAbs().maxCoeff();
    for (Index row : attacked)
      if (std::abs(Hc(row)) > options.zero_tol) ++cand.attacked_rows;
    if (!best || better(cand, *best, options.leak_tol)) best = std::move(cand);
  }
  if (!best) throw InfeasibleError("strategic attack: every candidate lies in the null space of H");

  Vector c = best->c;
  const double cmax = c.cwiseAbs().maxCoeff();
  c *= std::max(psi, cmax) / cmax;

  AttackVector out;
  out.kind = kind;
  out.a = H * c;
  out.c = std::move(c);
  out.solver = best->solver;
  out.residual = unobservability_check(H, out.a).residual;
  out.leak_warning = best->leak > options.leak_tol;
  return out;
}

SolverConfig column_config(const SolverConfig& config, const StrategicOptions& options, const Matrix& M,
                           const Vector& target) {
  SolverConfig cfg = config;
  if (options.lambda_scale) cfg.lambda = *options.lambda_scale * (M.transpose() * target).cwiseAbs().maxCoeff();
  return cfg;
}

}  // namespace

AttackVector strategic_lasso_attack(const Matrix& H, const IndexList& secure, double psi, const SolverConfig& config,
                                    const StrategicOptions& options) {
  config.validate();
  return strategic_search(AttackKind::sla, H, secure, psi, options, [&](const Matrix& M, const Vector& target) {
    SolveResult r = lasso_admm(M, target, column_config(config, options, M, target));
    r.solution = refit_on_support(M, target, r.solution);
    return r;
  });
}

AttackVector strategic_selective_attack(const Matrix& H, const IndexList& secure, Index k, double psi,
                                        const SolverConfig& config, const StrategicOptions& options) {
  config.validate();
  if (k < 0 || k > H.cols() - 1) throw ValidationError("strategic selective attack: k must lie in [0, D-1]");
  AttackVector out =
      strategic_search(AttackKind::ssa, H, secure, psi, options, [&](const Matrix& M, const Vector& target) {
        return regressor_selection_admm(M, target, k, config);
      });
  out.k = k;
  return out;
}

AttackVector random_sparse_attack(Index measurements, Index k, double amp_mean, double amp_variance,
                                  std::mt19937_64& rng) {
  if (measurements < 0 || k < 0 || k > measurements)
    throw ValidationError("random attack: k=" + std::to_string(k) + " out of range for N=" + std::to_string(measurements));
  if (!(amp_variance >= 0.0)) throw ValidationError("random attack: variance must be non-negative");

  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  std::vector<Index> order(static_cast<std::size_t>(measurements));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, measurements - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::normal_distribution<double> amplitude(amp_mean, std::sqrt(amp_variance));

  AttackVector out;
  out.kind = AttackKind::random;
  out.a = Vector::Zero(measurements);
  for (Index i = 0; i < k; ++i) {
    const double value = amp_variance > 0.0 ? amplitude(rng) : amp_mean;
    out.a(order[static_cast<std::size_t>(i)]) = value;
  }
  out.k = k;
  out.solver = {true, 0};
  return out;
}

AttackVector random_sparse_attack(Index measurements, Index k, double amp_mean, double amp_variance,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_sparse_attack(measurements, k, amp_mean, amp_variance, rng);
}

AttackVector distributed_sparse_attack(const Matrix& H, const Vector& a_target, const ClusterPartition& partition,
                                       const SolverConfig& config) {
  if (partition.axis != ClusterPartition::Axis::rows)
    throw ValidationError("distributed attack: partition must group measurement rows");
  if (a_target.size() != H.rows()) throw ValidationError("distributed attack: a_target has wrong length");
  partition.validate(H.rows());
  const ClusterPartition canon = partition.canonical();
  RowBlocks blocks;
  for (const auto& g : canon.groups) blocks.push_back({linalg::select_rows(H, g), linalg::select(a_target, g)});
  SolveResult solve = consensus_lasso_admm(blocks, config);
  Vector a = H * solve.solution;
  return finish(AttackKind::distributed, H, std::move(a), solve.solution, solve);
}

AttackVector collective_sparse_attack(const Matrix& H, const Vector& a_target, const ClusterPartition& groups,
                                      const SolverConfig& config, const InnerSolverConfig& inner) {
  if (groups.axis != ClusterPartition::Axis::columns)
    throw ValidationError("collective attack: partition must group state columns");
  if (a_target.size() != H.rows()) throw ValidationError("collective attack: a_target has wrong length");
  groups.validate(H.cols());
  SolveResult solve = sharing_group_lasso_admm({H, groups.groups}, a_target, config, inner);
  Vector a = H * solve.solution;
  return finish(AttackKind::collective, H, std::move(a), solve.solution, solve);
}

}  // namespace gridsparse
