#include "riemstat/linalg.hpp"

#include <cmath>

#include "riemstat/errors.hpp"

namespace riemstat::linalg {

namespace {

template <typename F>
MatrixXd sym_apply(const MatrixXd& s, F&& f) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(s));
  VectorXd values = eig.eigenvalues().unaryExpr(f);
  const MatrixXd& vecs = eig.eigenvectors();
  return symmetrize(vecs * values.asDiagonal() * vecs.transpose());
}

}  // namespace

MatrixXd unflatten(const VectorXd& flat, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RowMajorMatrix>(flat.data(), rows, cols);
}

VectorXd flatten(const MatrixXd& m) {
  RowMajorMatrix rm = m;
  return Eigen::Map<const VectorXd>(rm.data(), rm.size());
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd sym_sqrt(const MatrixXd& s) {
  return sym_apply(s, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

MatrixXd sym_inv_sqrt(const MatrixXd& s) {
  return sym_apply(s, [](double v) { return 1.0 / std::sqrt(v); });
}

MatrixXd sym_exp(const MatrixXd& s) {
  return sym_apply(s, [](double v) { return std::exp(v); });
}

MatrixXd sym_log(const MatrixXd& s) {
  return sym_apply(s, [](double v) { return std::log(v); });
}

VectorXd mandel(const MatrixXd& s) {
  const Eigen::Index d = s.rows();
  VectorXd v(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) v(k++) = s(i, i);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) v(k++) = M_SQRT2 * 0.5 * (s(i, j) + s(j, i));
  return v;
}

MatrixXd unmandel(const VectorXd& v, Eigen::Index d) {
  MatrixXd s(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) s(i, i) = v(k++);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      s(i, j) = s(j, i) = v(k++) * M_SQRT1_2;
    }
  return s;
}

MatrixXd regularize(const MatrixXd& cov, double lambda, double floor) {
  const auto n = static_cast<double>(cov.rows());
  const double shift = std::max(lambda * cov.trace() / n, floor);
  MatrixXd out = symmetrize(cov);
  out.diagonal().array() += shift;
  return out;
}

MatrixXd spd_inverse(const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) throw SingularSystemError("matrix is not positive definite");
  return symmetrize(llt.solve(MatrixXd::Identity(s.rows(), s.cols())));
}

MatrixXd block_diagonal(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace riemstat::linalg
