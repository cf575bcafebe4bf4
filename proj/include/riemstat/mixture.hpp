#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "riemstat/gaussian.hpp"

namespace riemstat {

struct GaussianMixture {
  Manifold manifold;
  Eigen::VectorXd priors;
  std::vector<Gaussian> components;

  std::size_t size() const { return components.size(); }
  // log sum_k pi_k N(x | mu_k, Sigma_k), evaluated with log-sum-exp.
  double log_density(const Point& x) const;
  // Throws InputError unless priors are a distribution and components share
  // the mixture manifold.
  void validate() const;
};

struct EmOptions {
  int k = 1;
  std::uint64_t seed = 1;
  // Stop once the log-likelihood improves by less than this. NaN selects the
  // default of 1e-8 * N; -infinity runs exactly max_iter iterations.
  double tol_ll = std::numeric_limits<double>::quiet_NaN();
  int max_iter = 200;
  int kmeans_iter = 5;
  IterOptions mean_options{};
  // Throw NoConvergenceError when max_iter is exhausted.
  bool require_convergence = true;
};

// Component `component` had vanishing responsibility after M-step
// `iteration` and was reseeded at the worst-fit datapoint.
struct ReseedEvent {
  int iteration;
  std::size_t component;
};

struct EmReport {
  std::vector<double> log_likelihood;  // initial model first, then one per M-step
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd responsibilities;  // N x K, for the returned model
  std::vector<ReseedEvent> reseeds;
};

struct EmResult {
  GaussianMixture model;
  EmReport report;
};

// Geodesic k-means++ seeding followed by `kmeans_iter` k-means rounds.
GaussianMixture kmeans_init(const WeightedDataset& data, int k, std::uint64_t seed,
                            int kmeans_iter = 5, const IterOptions& mean_options = {});

EmResult em_fit(const WeightedDataset& data, const EmOptions& options);
EmResult em_fit(const WeightedDataset& data, GaussianMixture initial, const EmOptions& options);

// Same priors, components restricted to the selected factors.
GaussianMixture marginal(const GaussianMixture& model, std::span<const std::size_t> parts);

struct GmrResult {
  Gaussian gaussian;
  Eigen::VectorXd activations;
};

// Gaussian mixture regression: per-component conditioning, activation by the
// input marginals, then moment matching on the output manifold.
GmrResult gmr(const GaussianMixture& model, const JointPartition& partition, const Point& x_in,
              const IterOptions& options = {});

}  // namespace riemstat
