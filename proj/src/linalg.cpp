#include "gridsparse/linalg.hpp"

#include "gridsparse/error.hpp"

#include <algorithm>
#include <cmath>

namespace gridsparse::linalg {

namespace {

struct TruncatedSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

template <class Svd>
TruncatedSvd truncate(const Svd& svd, double rcond) {
  const Vector& s = svd.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = rcond * s(0);
    while (rank < s.size() && s(rank) > cutoff) ++rank;
  }
  return {svd.matrixU().leftCols(rank), s.head(rank), svd.matrixV().leftCols(rank)};
}

// Eigen 3.4.0's BDCSVD can return inconsistent singular vectors when many
// singular values are exactly zero (projectors hit this). Check the
// factorization and fall back to Jacobi when it does not reproduce m.
TruncatedSvd truncated_svd(const Matrix& m, double rcond) {
  Eigen::BDCSVD<Matrix> bdc(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix recon = bdc.matrixU() * bdc.singularValues().asDiagonal() * bdc.matrixV().transpose();
  const double scale = bdc.singularValues().size() ? bdc.singularValues()(0) : 0.0;
  const double tol = 1e-10 * std::max(scale, 1e-300) * std::sqrt(static_cast<double>(std::max(m.rows(), m.cols())));
  if ((recon - m).cwiseAbs().maxCoeff() <= tol) return truncate(bdc, rcond);
  Eigen::JacobiSVD<Matrix> jacobi(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return truncate(jacobi, rcond);
}

}  // namespace

Matrix pseudo_inverse(const Matrix& m, double rcond) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  auto svd = truncated_svd(m, rcond);
  return svd.v * svd.s.cwiseInverse().asDiagonal() * svd.u.transpose();
}

Vector min_norm_solve(const Matrix& m, const Vector& b, double rcond) {
  if (m.rows() != b.size()) throw ValidationError("min_norm_solve: dimension mismatch");
  if (m.size() == 0) return Vector::Zero(m.cols());
  auto svd = truncated_svd(m, rcond);
  return svd.v * (svd.s.cwiseInverse().asDiagonal() * (svd.u.transpose() * b));
}

Matrix column_space_projector(const Matrix& m, double rcond) {
  if (m.size() == 0) return Matrix::Zero(m.rows(), m.rows());
  auto svd = truncated_svd(m, rcond);
  return svd.u * svd.u.transpose();
}

Matrix select_columns(const Matrix& m, const IndexList& columns) {
  Matrix out(m.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Index>(j)) = m.col(columns[j]);
  return out;
}

Matrix select_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector select(const Vector& v, const IndexList& indices) {
  Vector out(static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) out(static_cast<Index>(i)) = v(indices[i]);
  return out;
}

IndexList complement(Index n, const IndexList& indices) {
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (Index i : indices) {
    if (i < 0 || i >= n) throw ValidationError("index " + std::to_string(i) + " out of range");
    taken[static_cast<std::size_t>(i)] = true;
  }
  IndexList out;
  for (Index i = 0; i < n; ++i)
    if (!taken[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

double induced_inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

IndexList support(const Vector& v, double tol) {
  IndexList out;
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > tol) out.push_back(i);
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace gridsparse::linalg
