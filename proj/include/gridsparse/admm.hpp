#pragma once

#include "gridsparse/linalg.hpp"

#include <optional>
#include <vector>

namespace gridsparse {

/// Parameters shared by every ADMM variant. Defaults are the operating
/// point used in the experiments (rho = 1, eps_abs = 1e-4, eps_rel = 1e-2,
/// 10000 iterations).
struct SolverConfig {
  double rho = 1.0;
  double lambda = 0.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-2;
  int max_iter = 10000;

  void validate() const;
};

/// Stopping rule of the exact group-lasso subproblem solve.
struct InnerSolverConfig {
  double tolerance = 1e-8;
  int max_iter = 500;
};

struct SolveResult {
  /// Thresholded iterate (beta); carries exact zeros.
  Vector solution;
  /// Unthresholded primal iterate (the ridge / projection step output).
  Vector auxiliary;
  /// Final local iterates of the consensus and sharing solvers, by cluster.
  std::vector<Vector> local;
  int iterations = 0;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  bool converged = false;
};

struct SolveSummary {
  bool converged = false;
  int iterations = 0;
};

inline SolveSummary summarize(const SolveResult& r) { return {r.converged, r.iterations}; }

struct RowBlock {
  Matrix A;
  Vector y;
};
using RowBlocks = std::vector<RowBlock>;

struct ColumnGroups {
  Matrix A;
  std::vector<IndexList> groups;

  /// Groups must be nonempty, disjoint and cover every column.
  void validate() const;
};

/// Elementwise (phi - kappa)_+ - (-phi - kappa)_+.
Vector soft_threshold(const Vector& phi, double kappa);

/// Keeps the k largest-magnitude entries; ties go to the lower index.
Vector hard_threshold_keep_k(const Vector& v, Index k);

/// Norms entering the relative part of the tolerances: the split primal
/// iterate (Ax), the thresholded iterate (beta) and the unscaled dual (rho u).
struct IterateNorms {
  double primal_iterate = 0.0;
  double split_iterate = 0.0;
  double scaled_dual = 0.0;
};

/// primal <= sqrt(primal_dim) eps_abs + eps_rel max(|Ax|, |beta|) and
/// dual <= sqrt(dual_dim) eps_abs + eps_rel |rho u|.
bool stopping_check(double primal_norm, double dual_norm, const IterateNorms& norms, Index primal_dim,
                    Index dual_dim, const SolverConfig& config);

inline bool stopping_check(double primal_norm, double dual_norm, const IterateNorms& norms, Index dim,
                           const SolverConfig& config) {
  return stopping_check(primal_norm, dual_norm, norms, dim, dim, config);
}

/// Number of matrix factorizations performed since process start. Exposed
/// so tests can observe factorization reuse.
long factorization_count();

/// Solves (A^T A + rho I) x = v with one cached Cholesky factor. When A has
/// fewer rows than columns the N x N factor of (A A^T + rho I) is used via
/// the matrix inversion lemma.
class RidgeSolver {
 public:
  RidgeSolver(const Matrix& A, double rho);

  Vector solve(const Vector& v) const;
  double rho() const { return rho_; }

 private:
  double rho_;
  bool wide_;
  Matrix wide_A_;  // kept only for the N < D path
  Eigen::LLT<Matrix> llt_;
};

/// ADMM for the l1 / l0 penalized least-squares family over a fixed
/// design matrix. The ridge factor is built on first use and reused for
/// every later solve with the same rho.
///
/// lasso():               minimize 1/2 |y - A a|^2 + lambda |beta|_1, a = beta
/// regressor_selection(): minimize 1/2 |y - A a|^2 s.t. |a|_0 <= k
class LassoAdmm {
 public:
  explicit LassoAdmm(Matrix A);

  SolveResult lasso(const Vector& y, const SolverConfig& config);

  /// Same iteration with the soft threshold replaced by
  /// hard_threshold_keep_k; the returned beta is refit by least squares on
  /// its own support.
  SolveResult regressor_selection(const Vector& y, Index k, const SolverConfig& config);

  const Matrix& design() const { return A_; }

 private:
  template <class Threshold>
  SolveResult run(const Vector& y, const SolverConfig& config, Threshold&& threshold);

  const RidgeSolver& ridge(double rho);

  Matrix A_;
  std::optional<RidgeSolver> ridge_;
};

SolveResult lasso_admm(const Matrix& A, const Vector& y, const SolverConfig& config);

SolveResult regressor_selection_admm(const Matrix& A, const Vector& y, Index k, const SolverConfig& config);

/// minimize |a|_1 s.t. B a = y. The a-step projects onto the affine set
/// with a pseudoinverse of B computed once; beta is soft-thresholded at
/// 1/rho. Throws InfeasibleError when y is not in range(B) to 1e-6 |y|.
SolveResult basis_pursuit_admm(const Matrix& B, const Vector& y, const SolverConfig& config);

/// Global-consensus LASSO: minimize sum_i 1/2 |y_i - A_i x_i|^2 + lambda |beta|_1
/// subject to x_i = beta. Local ridge steps, averaged soft threshold at
/// lambda / (rho G), per-cluster dual updates. Clusters are aggregated in
/// the order given.
SolveResult consensus_lasso_admm(const RowBlocks& blocks, const SolverConfig& config);

/// Sharing ADMM for minimize 1/2 |sum_i A_i x_i - y|^2 + lambda sum_i |x_i|_2
/// over column groups. Groups are processed in ascending order of their
/// smallest column, so the result does not depend on the order given.
/// The solution is returned in the original column order.
SolveResult sharing_group_lasso_admm(const ColumnGroups& problem, const Vector& y, const SolverConfig& config,
                                     const InnerSolverConfig& inner = {});

/// 1/2 |A x - y|^2 + lambda sum_g |x_g|_2.
double group_lasso_objective(const ColumnGroups& problem, const Vector& y, const Vector& x, double lambda);

}  // namespace gridsparse
