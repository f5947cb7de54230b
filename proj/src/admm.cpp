#include "gridsparse/admm.hpp"

#include "gridsparse/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

namespace gridsparse {

namespace {

std::atomic<long> g_factorizations{0};

void require_finite(const Matrix& A, const Vector& y, const char* who) {
  if (!A.allFinite() || !y.allFinite()) throw ValidationError(std::string(who) + ": non-finite input");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be non-negative");
  if (!(eps_abs > 0.0)) throw ValidationError("eps_abs must be positive");
  if (!(eps_rel > 0.0)) throw ValidationError("eps_rel must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
}

void ColumnGroups::validate() const {
  if (groups.empty()) throw ValidationError("column groups: need at least one group");
  std::vector<int> seen(static_cast<std::size_t>(A.cols()), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("column groups: empty group");
    for (Index j : g) {
      if (j < 0 || j >= A.cols()) throw ValidationError("column groups: index " + std::to_string(j) + " out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw ValidationError("column groups: column " + std::to_string(j) + " appears twice");
    }
  }
  for (std::size_t j = 0; j < seen.size(); ++j)
    if (!seen[j]) throw ValidationError("column groups: column " + std::to_string(j) + " not covered");
}

Vector soft_threshold(const Vector& phi, double kappa) {
  if (kappa < 0.0) throw ValidationError("soft_threshold: kappa must be non-negative");
  return (phi.array() - kappa).max(0.0) - (-phi.array() - kappa).max(0.0);
}

Vector hard_threshold_keep_k(const Vector& v, Index k) {
  if (k < 0 || k > v.size()) throw ValidationError("hard_threshold_keep_k: k out of range");
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(v(a)) > std::abs(v(b)); });
  Vector out = Vector::Zero(v.size());
  for (Index i = 0; i < k; ++i) out(order[static_cast<std::size_t>(i)]) = v(order[static_cast<std::size_t>(i)]);
  return out;
}

bool stopping_check(double primal_norm, double dual_norm, const IterateNorms& norms, Index primal_dim,
                    Index dual_dim, const SolverConfig& config) {
  const double eps_primal = std::sqrt(static_cast<double>(primal_dim)) * config.eps_abs +
                            config.eps_rel * std::max(norms.primal_iterate, norms.split_iterate);
  const double eps_dual =
      std::sqrt(static_cast<double>(dual_dim)) * config.eps_abs + config.eps_rel * norms.scaled_dual;
  return primal_norm <= eps_primal && dual_norm <= eps_dual;
}

long factorization_count() { return g_factorizations.load(); }

RidgeSolver::RidgeSolver(const Matrix& A, double rho) : rho_(rho), wide_(A.rows() > 0 && A.rows() < A.cols()) {
  if (!(rho > 0.0)) throw ValidationError("ridge: rho must be positive");
  if (wide_) {
    wide_A_ = A;
    Matrix gram = A * A.transpose();
    gram.diagonal().array() += rho;
    llt_.compute(gram);
  } else {
    Matrix gram = A.transpose() * A;
    gram.diagonal().array() += rho;
    llt_.compute(gram);
  }
  ++g_factorizations;
}

Vector RidgeSolver::solve(const Vector& v) const {
  if (!wide_) return llt_.solve(v);
  // (A^T A + rho I)^-1 = (I - A^T (A A^T + rho I)^-1 A) / rho
  return (v - wide_A_.transpose() * llt_.solve(wide_A_ * v)) / rho_;
}

LassoAdmm::LassoAdmm(Matrix A) : A_(std::move(A)) {
  if (A_.cols() == 0) throw ValidationError("lasso: design matrix has no columns");
  if (!A_.allFinite()) throw ValidationError("lasso: non-finite design matrix");
}

const RidgeSolver& LassoAdmm::ridge(double rho) {
  if (!ridge_ || ridge_->rho() != rho) ridge_.emplace(A_, rho);
  return *ridge_;
}

template <class Threshold>
SolveResult LassoAdmm::run(const Vector& y, const SolverConfig& config, Threshold&& threshold) {
  config.validate();
  if (y.size() != A_.rows()) throw ValidationError("lasso: y has wrong length");
  require_finite(A_, y, "lasso");

  const Index D = A_.cols();
  const RidgeSolver& solver = ridge(config.rho);
  const Vector Aty = A_.transpose() * y;

  Vector beta = Vector::Zero(D);
  Vector u = Vector::Zero(D);
  Vector a = Vector::Zero(D);
  SolveResult result;
  for (int t = 0; t < config.max_iter; ++t) {
    a = solver.solve(Aty + config.rho * (beta - u));
    const Vector beta_prev = beta;
    beta = threshold(a + u);
    u += a - beta;

    const double primal = (a - beta).norm();
    const double dual = config.rho * (beta - beta_prev).norm();
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.iterations = t + 1;
    if (stopping_check(primal, dual, {a.norm(), beta.norm(), config.rho * u.norm()}, D, config)) {
      result.converged = true;
      break;
    }
  }
  result.solution = std::move(beta);
  result.auxiliary = std::move(a);
  return result;
}

SolveResult LassoAdmm::lasso(const Vector& y, const SolverConfig& config) {
  const double kappa = config.lambda / config.rho;
  return run(y, config, [kappa](const Vector& v) { return soft_threshold(v, kappa); });
}

SolveResult LassoAdmm::regressor_selection(const Vector& y, Index k, const SolverConfig& config) {
  if (k < 0 || k > A_.cols()) throw ValidationError("regressor selection: k out of range");
  SolveResult result = run(y, config, [k](const Vector& v) { return hard_threshold_keep_k(v, k); });
  const IndexList support = linalg::support(result.solution);
  if (!support.empty()) {
    const Vector coef = linalg::min_norm_solve(linalg::select_columns(A_, support), y);
    result.solution.setZero();
    for (std::size_t i = 0; i < support.size(); ++i) result.solution(support[i]) = coef(static_cast<Index>(i));
  }
  return result;
}

SolveResult lasso_admm(const Matrix& A, const Vector& y, const SolverConfig& config) {
  return LassoAdmm(A).lasso(y, config);
}

SolveResult regressor_selection_admm(const Matrix& A, const Vector& y, Index k, const SolverConfig& config) {
  return LassoAdmm(A).regressor_selection(y, k, config);
}

SolveResult basis_pursuit_admm(const Matrix& B, const Vector& y, const SolverConfig& config) {
  config.validate();
  if (B.rows() != y.size()) throw ValidationError("basis pursuit: y has wrong length");
  if (B.cols() == 0) throw ValidationError("basis pursuit: matrix has no columns");
  require_finite(B, y, "basis pursuit");

  const Matrix pinv = linalg::pseudo_inverse(B);
  ++g_factorizations;
  const Vector least_norm = pinv * y;
  const double infeasibility = (B * least_norm - y).norm();
  if (infeasibility > 1e-6 * y.norm() && infeasibility > 0.0)
    throw InfeasibleError("basis pursuit: y is outside the range of B (residual " + std::to_string(infeasibility) + ")");

  const Index D = B.cols();
  const double kappa = 1.0 / config.rho;
  Vector beta = Vector::Zero(D);
  Vector u = Vector::Zero(D);
  Vector a = Vector::Zero(D);
  SolveResult result;
  for (int t = 0; t < config.max_iter; ++t) {
    const Vector v = beta - u;
    a = v - pinv * (B * v - y);
    const Vector beta_prev = beta;
    beta = soft_threshold(a + u, kappa);
    u += a - beta;

    const double primal = (a - beta).norm();
    const double dual = config.rho * (beta - beta_prev).norm();
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.iterations = t + 1;
    if (stopping_check(primal, dual, {a.norm(), beta.norm(), config.rho * u.norm()}, D, config)) {
      result.converged = true;
      break;
    }
  }
  result.solution = std::move(beta);
  result.auxiliary = std::move(a);
  return result;
}

SolveResult consensus_lasso_admm(const RowBlocks& blocks, const SolverConfig& config) {
  config.validate();
  if (blocks.empty()) throw ValidationError("consensus: need at least one block");
  const Index D = blocks.front().A.cols();
  if (D == 0) throw ValidationError("consensus: blocks have no columns");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].A.cols() != D)
      throw ValidationError("consensus: block " + std::to_string(i) + " has " + std::to_string(blocks[i].A.cols()) +
                            " columns, expected " + std::to_string(D));
    if (blocks[i].A.rows() != blocks[i].y.size())
      throw ValidationError("consensus: block " + std::to_string(i) + " has mismatched y");
    require_finite(blocks[i].A, blocks[i].y, "consensus");
  }

  const std::size_t G = blocks.size();
  const double g = static_cast<double>(G);
  std::vector<RidgeSolver> solvers;
  std::vector<Vector> Aty;
  solvers.reserve(G);
  for (const auto& block : blocks) {
    solvers.emplace_back(block.A, config.rho);
    Aty.push_back(block.A.transpose() * block.y);
  }

  Vector beta = Vector::Zero(D);
  std::vector<Vector> x(G, Vector::Zero(D));
  std::vector<Vector> u(G, Vector::Zero(D));
  const double kappa = config.lambda / (config.rho * g);
  SolveResult result;
  for (int t = 0; t < config.max_iter; ++t) {
    // Local updates are independent; the barrier is the average below.
    for (std::size_t i = 0; i < G; ++i) x[i] = solvers[i].solve(Aty[i] + config.rho * (beta - u[i]));

    Vector average = Vector::Zero(D);
    for (std::size_t i = 0; i < G; ++i) average += x[i] + u[i];
    average /= g;
    const Vector beta_prev = beta;
    beta = soft_threshold(average, kappa);

    double primal_sq = 0.0, x_sq = 0.0, u_sq = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      u[i] += x[i] - beta;
      primal_sq += (x[i] - beta).squaredNorm();
      x_sq += x[i].squaredNorm();
      u_sq += u[i].squaredNorm();
    }
    const double primal = std::sqrt(primal_sq);
    const double dual = config.rho * std::sqrt(g) * (beta - beta_prev).norm();
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.iterations = t + 1;
    const IterateNorms norms{std::sqrt(x_sq), std::sqrt(g) * beta.norm(), config.rho * std::sqrt(u_sq)};
    if (stopping_check(primal, dual, norms, static_cast<Index>(G) * D, config)) {
      result.converged = true;
      break;
    }
  }
  result.solution = std::move(beta);
  result.auxiliary = x.front();
  result.local = std::move(x);
  return result;
}

namespace {

// Exact minimizer of 1/2 |A x - w|^2 + c |x|_2 given the eigendecomposition
// A^T A = V diag(s) V^T and g = A^T w. For |g| > c the minimizer is
// x = V diag(t / (s t + c)) V^T g where t = |x| solves
// sum_j b_j^2 / (s_j t + c)^2 = 1, b = V^T g.
struct GroupProx {
  Matrix V;
  Vector s;

  Vector solve(const Vector& g, double c, const InnerSolverConfig& inner) const {
    const Index n = g.size();
    if (g.norm() <= c) return Vector::Zero(n);
    const Vector b = V.transpose() * g;
    if (c == 0.0) {
      const double cutoff = 1e-12 * std::max(s.maxCoeff(), 0.0);
      Vector scaled = Vector::Zero(n);
      for (Index j = 0; j < n; ++j)
        if (s(j) > cutoff) scaled(j) = b(j) / s(j);
      return V * scaled;
    }
    // phi(t) = sum b_j^2 / (s_j t + c)^2 - 1 is convex and decreasing, so
    // Newton from t = 0 increases monotonically to the root.
    double t = 0.0;
    for (int it = 0; it < inner.max_iter; ++it) {
      double phi = -1.0, dphi = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double denom = s(j) * t + c;
        const double q = b(j) * b(j) / (denom * denom);
        phi += q;
        dphi -= 2.0 * q * s(j) / denom;
      }
      if (phi <= 0.0 || dphi >= 0.0) break;
      const double step = -phi / dphi;
      t += step;
      if (step <= inner.tolerance * std::max(t, 1.0)) break;
    }
    Vector scaled(n);
    for (Index j = 0; j < n; ++j) scaled(j) = t * b(j) / (s(j) * t + c);
    return V * scaled;
  }
};

}  // namespace

double group_lasso_objective(const ColumnGroups& problem, const Vector& y, const Vector& x, double lambda) {
  double penalty = 0.0;
  for (const auto& g : problem.groups) penalty += linalg::select(x, g).norm();
  return 0.5 * (problem.A * x - y).squaredNorm() + lambda * penalty;
}

SolveResult sharing_group_lasso_admm(const ColumnGroups& problem, const Vector& y, const SolverConfig& config,
                                     const InnerSolverConfig& inner) {
  config.validate();
  problem.validate();
  if (problem.A.rows() != y.size()) throw ValidationError("sharing: y has wrong length");
  require_finite(problem.A, y, "sharing");
  if (!(inner.tolerance > 0.0) || inner.max_iter < 1) throw ValidationError("sharing: invalid inner solver config");

  std::vector<IndexList> groups = problem.groups;
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(), [](const IndexList& a, const IndexList& b) { return a.front() < b.front(); });

  const std::size_t G = groups.size();
  const double g_count = static_cast<double>(G);
  const Index N = problem.A.rows();
  const Index D = problem.A.cols();
  const double rho = config.rho;
  const double c = config.lambda / rho;

  std::vector<Matrix> blocks;
  std::vector<GroupProx> prox;
  for (const auto& g : groups) {
    blocks.push_back(linalg::select_columns(problem.A, g));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blocks.back().transpose() * blocks.back());
    ++g_factorizations;
    prox.push_back({eig.eigenvectors(), eig.eigenvalues().cwiseMax(0.0)});
  }

  std::vector<Vector> x(G);
  std::vector<Vector> Ax(G, Vector::Zero(N));
  for (std::size_t i = 0; i < G; ++i) x[i] = Vector::Zero(static_cast<Index>(groups[i].size()));
  Vector mean_Ax = Vector::Zero(N);
  Vector v_bar = Vector::Zero(N);
  Vector u = Vector::Zero(N);

  SolveResult result;
  for (int t = 0; t < config.max_iter; ++t) {
    std::vector<Vector> Ax_next(G);
    for (std::size_t i = 0; i < G; ++i) {
      // theta_i = A_i x - (A_i x_i^t + v_bar - mean_Ax - u)
      const Vector target = Ax[i] + v_bar - mean_Ax - u;
      x[i] = prox[i].solve(blocks[i].transpose() * target, c, inner);
      Ax_next[i] = blocks[i] * x[i];
    }
    Vector mean_next = Vector::Zero(N);
    for (std::size_t i = 0; i < G; ++i) mean_next += Ax_next[i];
    mean_next /= g_count;

    const Vector v_next = (y + rho * mean_next + rho * u) / (g_count + rho);
    u += mean_next - v_next;

    // Per-cluster split variables z_i = A_i x_i + v_bar - mean_Ax.
    double dual_sq = 0.0, ax_sq = 0.0, z_sq = 0.0, dual_var_sq = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      const Vector dz = (Ax_next[i] - Ax[i]) + (v_next - v_bar) - (mean_next - mean_Ax);
      dual_sq += (blocks[i].transpose() * dz).squaredNorm();
      ax_sq += Ax_next[i].squaredNorm();
      z_sq += (Ax_next[i] + v_next - mean_next).squaredNorm();
      dual_var_sq += (blocks[i].transpose() * u).squaredNorm();
    }
    const double primal = std::sqrt(g_count) * (mean_next - v_next).norm();
    const double dual = rho * std::sqrt(dual_sq);
    Ax = std::move(Ax_next);
    mean_Ax = std::move(mean_next);
    v_bar = v_next;

    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);
    result.iterations = t + 1;
    const IterateNorms norms{std::sqrt(ax_sq), std::sqrt(z_sq), rho * std::sqrt(dual_var_sq)};
    if (stopping_check(primal, dual, norms, N * static_cast<Index>(G), D, config)) {
      result.converged = true;
      break;
    }
  }

  result.solution = Vector::Zero(D);
  for (std::size_t i = 0; i < G; ++i)
    for (std::size_t j = 0; j < groups[i].size(); ++j) result.solution(groups[i][j]) = x[i](static_cast<Index>(j));
  result.auxiliary = result.solution;
  result.local = std::move(x);
  return result;
}

}  // namespace gridsparse
