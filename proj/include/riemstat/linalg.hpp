#pragma once

#include <Eigen/Dense>

namespace riemstat::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ambient storage of matrix-valued points is a flat row-major vector.
MatrixXd unflatten(const VectorXd& flat, Eigen::Index rows, Eigen::Index cols);
VectorXd flatten(const MatrixXd& m);

MatrixXd symmetrize(const MatrixXd& m);

// Matrix functions of a symmetric argument, evaluated through its
// eigendecomposition so that results are exactly symmetric.
MatrixXd sym_sqrt(const MatrixXd& s);
MatrixXd sym_inv_sqrt(const MatrixXd& s);
MatrixXd sym_exp(const MatrixXd& s);
MatrixXd sym_log(const MatrixXd& s);

// Orthonormal flattening of a symmetric d x d matrix into d(d+1)/2 entries:
// the diagonal first, then sqrt(2) * S(i, j) for i < j in row-major order.
VectorXd mandel(const MatrixXd& s);
MatrixXd unmandel(const VectorXd& v, Eigen::Index d);

// Adds max(lambda * tr(S) / n, floor) to the diagonal.
inline constexpr double kRegularization = 1e-6;
inline constexpr double kRegularizationFloor = 1e-12;
MatrixXd regularize(const MatrixXd& cov, double lambda = kRegularization,
                    double floor = kRegularizationFloor);

// Inverse of a symmetric positive definite matrix; throws SingularSystemError
// when the Cholesky factorization fails.
MatrixXd spd_inverse(const MatrixXd& s);

MatrixXd block_diagonal(const MatrixXd& a, const MatrixXd& b);

}  // namespace riemstat::linalg
