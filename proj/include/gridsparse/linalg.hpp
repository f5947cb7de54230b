#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gridsparse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

namespace linalg {

/// Moore-Penrose pseudoinverse. Singular values below
/// `rcond * sigma_max` are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rcond = 1e-10);

/// Minimum-norm least-squares solution of m x = b.
Vector min_norm_solve(const Matrix& m, const Vector& b, double rcond = 1e-10);

/// Orthogonal projector onto the column space of m.
Matrix column_space_projector(const Matrix& m, double rcond = 1e-10);

Matrix select_columns(const Matrix& m, const IndexList& columns);
Matrix select_rows(const Matrix& m, const IndexList& rows);
Vector select(const Vector& v, const IndexList& indices);

/// Indices of [0, n) not contained in `indices`, ascending.
IndexList complement(Index n, const IndexList& indices);

/// Induced infinity norm: maximum absolute row sum.
double induced_inf_norm(const Matrix& m);

/// Indices i with |v_i| > tol, ascending.
IndexList support(const Vector& v, double tol = 0.0);

bool all_finite(const Matrix& m);

}  // namespace linalg
}  // namespace gridsparse
