#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "riemstat/manifold.hpp"

namespace riemstat {

// Stopping rule shared by every fixed-point loop: stop once the update
// vector has norm below `tol`.
struct IterOptions {
  double tol = 1e-6;
  int max_iter = 100;
};

// Gaussian on a manifold: mean on the manifold, covariance over the chart
// coordinates of the tangent space at the mean.
struct Gaussian {
  Manifold manifold;
  Point mean;
  Eigen::MatrixXd cov;
};

struct WeightedDataset {
  Manifold manifold;
  std::vector<Point> points;
  Eigen::VectorXd weights;  // nonnegative, sums to 1

  static WeightedDataset uniform(Manifold manifold, std::vector<Point> points);
  // Normalizes the weights; throws InputError on negative or all-zero weights.
  static WeightedDataset weighted(Manifold manifold, std::vector<Point> points,
                                  Eigen::VectorXd weights);
  std::size_t size() const { return points.size(); }
};

// Input/output split of a product manifold, at factor granularity.
struct JointPartition {
  std::vector<std::size_t> input_parts;
  std::vector<std::size_t> output_parts;

  // Output parts are the complement of the inputs, in factor order.
  static JointPartition from_inputs(const Manifold& joint, std::vector<std::size_t> input_parts);
};

double log_density(const Gaussian& g, const Point& x);
double density(const Gaussian& g, const Point& x);

// Restriction of a Gaussian to a subset of its factors.
Gaussian marginal(const Gaussian& g, std::span<const std::size_t> parts);

struct MeanResult {
  Gaussian gaussian;
  int iterations = 0;
};

// Weighted Karcher mean by Gauss-Newton iteration, started at the heaviest
// point. The covariance is the weighted second moment of the chart log-images
// at the mean, regularized unless `regularize` is false.
MeanResult karcher_mean(const WeightedDataset& data, const IterOptions& options = {},
                        bool regularize = true);

struct FuseResult {
  Gaussian gaussian;
  int iterations = 0;
};

// Product of Gaussians. The iteration starts from the most concentrated input
// (smallest covariance determinant), which makes the result independent of
// the order of the inputs.
FuseResult fuse(std::span<const Gaussian> gaussians, const IterOptions& options = {});

struct ConditionResult {
  Gaussian gaussian;
  int iterations = 0;
};

// Conditional distribution of the output parts given the input parts of a
// joint Gaussian on a product manifold.
ConditionResult condition(const Gaussian& joint, const JointPartition& partition,
                          const Point& x_in, const IterOptions& options = {});

std::vector<Point> sample(const Gaussian& g, std::size_t n, std::uint64_t seed);

}  // namespace riemstat
