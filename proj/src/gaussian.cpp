#include "riemstat/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

WeightedDataset WeightedDataset::uniform(Manifold manifold, std::vector<Point> points) {
  const auto n = static_cast<Index>(points.size());
  if (n == 0) throw InputError("dataset is empty");
  return {std::move(manifold), std::move(points), VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
}

WeightedDataset WeightedDataset::weighted(Manifold manifold, std::vector<Point> points,
                                          VectorXd weights) {
  if (points.empty()) throw InputError("dataset is empty");
  if (weights.size() != static_cast<Index>(points.size()))
    throw DimensionMismatchError("one weight per datapoint is required");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw InputError("weights must be finite and nonnegative");
  const double total = weights.sum();
  if (!(total > 0.0)) throw InputError("weights sum to zero");
  return {std::move(manifold), std::move(points), weights / total};
}

JointPartition JointPartition::from_inputs(const Manifold& joint,
                                           std::vector<std::size_t> input_parts) {
  std::sort(input_parts.begin(), input_parts.end());
  if (std::adjacent_find(input_parts.begin(), input_parts.end()) != input_parts.end())
    throw InputError("duplicate input part");
  JointPartition p;
  for (std::size_t i = 0; i < joint.num_parts(); ++i) {
    if (std::binary_search(input_parts.begin(), input_parts.end(), i)) {
      p.input_parts.push_back(i);
    } else {
      p.output_parts.push_back(i);
    }
  }
  if (p.input_parts.size() != input_parts.size()) throw InputError("input part index out of range");
  if (p.output_parts.empty()) throw InputError("partition leaves no output part");
  return p;
}

double log_density(const Gaussian& g, const Point& x) {
  const VectorXd v = g.manifold.log(g.mean, x);
  Eigen::LLT<MatrixXd> llt(g.cov);
  if (llt.info() != Eigen::Success) throw SingularSystemError("covariance is not positive definite");
  const MatrixXd& l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double mahalanobis = llt.matrixL().solve(v).squaredNorm();
  const double dim = static_cast<double>(v.size());
  return -0.5 * (dim * std::log(2.0 * std::numbers::pi) + logdet + mahalanobis);
}

double density(const Gaussian& g, const Point& x) { return std::exp(log_density(g, x)); }

Gaussian marginal(const Gaussian& g, std::span<const std::size_t> parts) {
  const std::vector<Index> idx = g.manifold.tangent_indices(parts);
  return {g.manifold.subset(parts), g.manifold.gather_point(g.mean, parts), g.cov(idx, idx)};
}

MeanResult karcher_mean(const WeightedDataset& data, const IterOptions& options, bool regularize) {
  if (data.points.empty()) throw InputError("karcher mean of an empty dataset");
  if (!(options.tol > 0.0)) throw InputError("tolerance must be positive");
  const Manifold& m = data.manifold;
  Index start = 0;
  data.weights.maxCoeff(&start);
  Point mean = data.points[static_cast<std::size_t>(start)];

  std::vector<VectorXd> logs(data.points.size());
  for (int iter = 0;; ++iter) {
    VectorXd u = VectorXd::Zero(m.dim());
    for (std::size_t n = 0; n < data.points.size(); ++n) {
      logs[n] = m.log(mean, data.points[n]);
      u += data.weights(static_cast<Index>(n)) * logs[n];
    }
    if (u.norm() < options.tol) {
      MatrixXd cov = MatrixXd::Zero(m.dim(), m.dim());
      for (std::size_t n = 0; n < logs.size(); ++n)
        cov += data.weights(static_cast<Index>(n)) * logs[n] * logs[n].transpose();
      cov = regularize ? linalg::regularize(cov) : linalg::symmetrize(cov);
      return {{m, std::move(mean), std::move(cov)}, iter};
    }
    if (iter >= options.max_iter) throw NoConvergenceError("karcher mean did not converge", iter);
    mean = m.exp(mean, u);
  }
}

FuseResult fuse(std::span<const Gaussian> gaussians, const IterOptions& options) {
  if (gaussians.empty()) throw InputError("fusion needs at least one Gaussian");
  const Manifold& m = gaussians.front().manifold;
  for (const Gaussian& g : gaussians) {
    if (!(g.manifold == m)) throw DimensionMismatchError("fused Gaussians must share a manifold");
  }

  auto start_key = [](const Gaussian& g) {
    const double logdet = Eigen::LLT<MatrixXd>(g.cov).matrixLLT().diagonal().array().log().sum();
    return std::make_tuple(logdet, std::vector<double>(g.mean.data(), g.mean.data() + g.mean.size()));
  };
  const Gaussian* first = &gaussians.front();
  auto best = start_key(*first);
  for (const Gaussian& g : gaussians) {
    auto key = start_key(g);
    if (key < best) {
      best = std::move(key);
      first = &g;
    }
  }

  Point mean = first->mean;
  for (int iter = 0;; ++iter) {
    MatrixXd info = MatrixXd::Zero(m.dim(), m.dim());
    VectorXd weighted = VectorXd::Zero(m.dim());
    for (const Gaussian& g : gaussians) {
      const MatrixXd precision = linalg::spd_inverse(m.transport_cov(g.mean, mean, g.cov));
      info += precision;
      weighted += precision * m.log(mean, g.mean);
    }
    const MatrixXd cov = linalg::spd_inverse(info);
    const VectorXd u = cov * weighted;
    if (u.norm() < options.tol) return {{m, std::move(mean), cov}, iter};
    if (iter >= options.max_iter) throw NoConvergenceError("product of Gaussians did not converge", iter);
    mean = m.exp(mean, u);
  }
}

ConditionResult condition(const Gaussian& joint, const JointPartition& partition,
                          const Point& x_in, const IterOptions& options) {
  const Manifold& m = joint.manifold;
  const bool has_input = !partition.input_parts.empty();
  const Manifold out_m = m.subset(partition.output_parts);
  const Index in_size = has_input ? m.subset(partition.input_parts).ambient_dim() : 0;
  if (x_in.size() != in_size)
    throw DimensionMismatchError("conditioning input does not match the input parts");
  const std::vector<Index> in_idx = m.tangent_indices(partition.input_parts);
  const std::vector<Index> out_idx = m.tangent_indices(partition.output_parts);
  const Point mu_in = m.gather_point(joint.mean, partition.input_parts);
  const Point mu_out = m.gather_point(joint.mean, partition.output_parts);
  const VectorXd input_dev =
      has_input ? m.subset(partition.input_parts).log(x_in, mu_in) : VectorXd();

  // Joint point (x_in, estimate) laid out in factor order.
  auto target = [&](const Point& estimate) {
    Point z(m.ambient_dim());
    Index in_at = 0, out_at = 0;
    for (std::size_t i = 0; i < m.num_parts(); ++i) {
      const Index len = m.factor(i).ambient_dim();
      const bool is_input = std::find(partition.input_parts.begin(), partition.input_parts.end(), i) !=
                            partition.input_parts.end();
      if (is_input) {
        z.segment(m.ambient_offset(i), len) = x_in.segment(in_at, len);
        in_at += len;
      } else {
        z.segment(m.ambient_offset(i), len) = estimate.segment(out_at, len);
        out_at += len;
      }
    }
    return z;
  };

  Point estimate = mu_out;
  for (int iter = 0;; ++iter) {
    const MatrixXd cov = m.transport_cov(joint.mean, target(estimate), joint.cov);
    const MatrixXd s_oo = cov(out_idx, out_idx);
    MatrixXd gain = MatrixXd::Zero(static_cast<Index>(out_idx.size()), static_cast<Index>(in_idx.size()));
    if (!in_idx.empty()) {
      const MatrixXd s_ii = cov(in_idx, in_idx);
      Eigen::LLT<MatrixXd> llt(s_ii);
      if (llt.info() != Eigen::Success)
        throw SingularSystemError("input covariance block is not positive definite");
      gain = llt.solve(cov(in_idx, out_idx)).transpose();
    }
    VectorXd u = out_m.log(estimate, mu_out);
    if (!in_idx.empty()) u -= gain * input_dev;
    if (u.norm() < options.tol) {
      MatrixXd out_cov = s_oo;
      if (!in_idx.empty()) out_cov -= gain * cov(in_idx, out_idx);
      return {{out_m, std::move(estimate), linalg::symmetrize(out_cov)}, iter};
    }
    if (iter >= options.max_iter) throw NoConvergenceError("conditioning did not converge", iter);
    estimate = out_m.exp(estimate, u);
  }
}

std::vector<Point> sample(const Gaussian& g, std::size_t n, std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(g.cov));
  const MatrixXd factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Point> out;
  out.reserve(n);
  VectorXd z(g.cov.rows());
  for (std::size_t i = 0; i < n; ++i) {
    for (Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
    out.push_back(g.manifold.exp(g.mean, factor * z));
  }
  return out;
}

}  // namespace riemstat
