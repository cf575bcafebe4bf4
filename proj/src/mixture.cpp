#include "riemstat/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kDegenerateMass = 1e-9;

double log_sum_exp(const VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Weighted second moment of the whole dataset in the chart at `center`.
MatrixXd chart_covariance(const WeightedDataset& data, const Point& center) {
  const Manifold& m = data.manifold;
  MatrixXd cov = MatrixXd::Zero(m.dim(), m.dim());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const VectorXd v = m.log(center, data.points[n]);
    cov += data.weights(static_cast<Index>(n)) * v * v.transpose();
  }
  return linalg::regularize(cov);
}

std::size_t draw(const VectorXd& mass, std::mt19937_64& rng) {
  const double total = mass.sum();
  std::uniform_real_distribution<double> uniform(0.0, total);
  const double target = uniform(rng);
  double acc = 0.0;
  for (Index i = 0; i < mass.size(); ++i) {
    acc += mass(i);
    if (target < acc) return static_cast<std::size_t>(i);
  }
  Index last = 0;
  mass.maxCoeff(&last);
  return static_cast<std::size_t>(last);
}

std::vector<std::size_t> assign(const WeightedDataset& data, const std::vector<Point>& centers) {
  std::vector<std::size_t> labels(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double d = data.manifold.dist(centers[k], data.points[n]);
      if (d < best) {
        best = d;
        labels[n] = k;
      }
    }
  }
  return labels;
}

// Members of cluster k with their data weights; empty when the cluster has
// no mass.
std::pair<std::vector<Point>, VectorXd> members(const WeightedDataset& data,
                                                const std::vector<std::size_t>& labels,
                                                std::size_t k) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (labels[n] == k) {
      pts.push_back(data.points[n]);
      w.push_back(data.weights(static_cast<Index>(n)));
    }
  }
  return {std::move(pts), Eigen::Map<VectorXd>(w.data(), static_cast<Index>(w.size()))};
}

double expected_log_density(const WeightedDataset& data, const Gaussian& g) {
  double q = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double w = data.weights(static_cast<Index>(n));
    if (w > 0.0) q += w * log_density(g, data.points[n]);
  }
  return q;
}

struct Expectation {
  MatrixXd responsibilities;
  VectorXd point_log_density;
  double log_likelihood;
};

Expectation e_step(const WeightedDataset& data, const GaussianMixture& model) {
  const auto n = static_cast<Index>(data.size());
  const auto k = static_cast<Index>(model.size());
  Expectation e{MatrixXd(n, k), VectorXd(n), 0.0};
  VectorXd row(k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      row(j) = std::log(model.priors(j)) +
               log_density(model.components[static_cast<std::size_t>(j)],
                           data.points[static_cast<std::size_t>(i)]);
    }
    const double lse = log_sum_exp(row);
    e.point_log_density(i) = lse;
    e.responsibilities.row(i) = (row.array() - lse).exp().matrix().transpose();
    e.responsibilities.row(i) /= e.responsibilities.row(i).sum();
  }
  // Sum over datapoints of log p(x_n), datapoint weights scaled to count N.
  e.log_likelihood = static_cast<double>(n) * data.weights.dot(e.point_log_density);
  return e;
}

GaussianMixture m_step(const WeightedDataset& data, const GaussianMixture& model,
                       const Expectation& e, const EmOptions& options, int iteration,
                       std::vector<ReseedEvent>& reseeds) {
  GaussianMixture next{model.manifold, VectorXd(model.size()), {}};
  next.components.reserve(model.size());
  for (std::size_t k = 0; k < model.size(); ++k) {
    const VectorXd mass = data.weights.cwiseProduct(e.responsibilities.col(static_cast<Index>(k)));
    const double total = mass.sum();
    if (total < kDegenerateMass) {
      Index worst = 0;
      e.point_log_density.minCoeff(&worst);
      const Point& center = data.points[static_cast<std::size_t>(worst)];
      next.components.push_back({data.manifold, center, chart_covariance(data, center)});
      next.priors(static_cast<Index>(k)) = 1.0 / static_cast<double>(data.size());
      reseeds.push_back({iteration, k});
      continue;
    }
    const WeightedDataset weighted = WeightedDataset::weighted(data.manifold, data.points, mass);
    Gaussian candidate = karcher_mean(weighted, options.mean_options, false).gaussian;
    const MatrixXd sample_cov = candidate.cov;
    candidate.cov = linalg::regularize(sample_cov);
    // The Karcher update is not an exact maximizer off Euclidean space; keep
    // the previous component when it scores better, so the likelihood cannot
    // drop (generalized EM). The candidate is credited with what its own
    // covariance regularization costs, which leaves flat factors on the
    // textbook path.
    const Gaussian& previous = model.components[k];
    const double q_candidate = expected_log_density(weighted, candidate);
    double allowance = 0.0;
    try {
      allowance = expected_log_density(weighted, {candidate.manifold, candidate.mean, sample_cov}) - q_candidate;
    } catch (const SingularSystemError&) {
      allowance = std::numeric_limits<double>::infinity();
    }
    if (expected_log_density(weighted, previous) > q_candidate + std::max(allowance, 0.0))
      candidate = previous;
    next.components.push_back(std::move(candidate));
    next.priors(static_cast<Index>(k)) = total;
  }
  next.priors /= next.priors.sum();
  return next;
}

}  // namespace

double GaussianMixture::log_density(const Point& x) const {
  VectorXd terms(static_cast<Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) {
    terms(static_cast<Index>(k)) =
        std::log(priors(static_cast<Index>(k))) + riemstat::log_density(components[k], x);
  }
  return log_sum_exp(terms);
}

void GaussianMixture::validate() const {
  if (components.empty()) throw InputError("mixture has no components");
  if (priors.size() != static_cast<Index>(components.size()))
    throw DimensionMismatchError("one prior per component is required");
  if ((priors.array() < 0.0).any() || std::abs(priors.sum() - 1.0) > 1e-12)
    throw InputError("priors must be nonnegative and sum to 1");
  for (const Gaussian& g : components) {
    if (!(g.manifold == manifold)) throw DimensionMismatchError("component manifold mismatch");
    if (g.mean.size() != manifold.ambient_dim() || g.cov.rows() != manifold.dim() ||
        g.cov.cols() != manifold.dim())
      throw DimensionMismatchError("component dimensions do not match the manifold");
  }
}

GaussianMixture kmeans_init(const WeightedDataset& data, int k, std::uint64_t seed,
                            int kmeans_iter, const IterOptions& mean_options) {
  if (k < 1) throw InputError("number of components must be >= 1");
  if (data.size() < static_cast<std::size_t>(k)) throw InputError("fewer datapoints than components");
  const Manifold& m = data.manifold;
  std::mt19937_64 rng(seed);

  std::vector<Point> centers{data.points[draw(data.weights, rng)]};
  while (centers.size() < static_cast<std::size_t>(k)) {
    VectorXd mass(static_cast<Index>(data.size()));
    for (std::size_t n = 0; n < data.size(); ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& c : centers) best = std::min(best, m.dist(c, data.points[n]));
      mass(static_cast<Index>(n)) = data.weights(static_cast<Index>(n)) * best * best;
    }
    centers.push_back(data.points[draw(mass.sum() > 0.0 ? mass : data.weights, rng)]);
  }

  std::vector<std::size_t> labels = assign(data, centers);
  for (int round = 0; round < kmeans_iter; ++round) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      auto [pts, w] = members(data, labels, c);
      if (pts.empty() || !(w.sum() > 0.0)) continue;
      centers[c] = karcher_mean(WeightedDataset::weighted(m, std::move(pts), w), mean_options)
                       .gaussian.mean;
    }
    labels = assign(data, centers);
  }

  GaussianMixture model{m, VectorXd(k), {}};
  for (std::size_t c = 0; c < centers.size(); ++c) {
    auto [pts, w] = members(data, labels, c);
    const double mass = w.sum();
    if (pts.size() < 2 || !(mass > 0.0)) {
      model.components.push_back({m, centers[c], chart_covariance(data, centers[c])});
      model.priors(static_cast<Index>(c)) = std::max(mass, 1.0 / static_cast<double>(data.size()));
      continue;
    }
    model.components.push_back(
        karcher_mean(WeightedDataset::weighted(m, std::move(pts), w), mean_options).gaussian);
    model.priors(static_cast<Index>(c)) = mass;
  }
  model.priors /= model.priors.sum();
  return model;
}

EmResult em_fit(const WeightedDataset& data, const EmOptions& options) {
  return em_fit(data, kmeans_init(data, options.k, options.seed, options.kmeans_iter,
                                  options.mean_options),
                options);
}

EmResult em_fit(const WeightedDataset& data, GaussianMixture initial, const EmOptions& options) {
  initial.validate();
  if (!(initial.manifold == data.manifold)) throw DimensionMismatchError("model and data manifolds differ");
  const double tol_ll =
      std::isnan(options.tol_ll) ? 1e-8 * static_cast<double>(data.size()) : options.tol_ll;

  EmResult result{std::move(initial), {}};
  EmReport& report = result.report;
  Expectation e = e_step(data, result.model);
  report.log_likelihood.push_back(e.log_likelihood);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    result.model = m_step(data, result.model, e, options, iter, report.reseeds);
    const double previous = e.log_likelihood;
    e = e_step(data, result.model);
    report.log_likelihood.push_back(e.log_likelihood);
    report.iterations = iter;
    if (e.log_likelihood - previous < tol_ll) {
      report.converged = true;
      break;
    }
  }
  report.responsibilities = std::move(e.responsibilities);
  if (!report.converged && options.require_convergence)
    throw NoConvergenceError("EM did not converge", report.iterations);
  return result;
}

GaussianMixture marginal(const GaussianMixture& model, std::span<const std::size_t> parts) {
  GaussianMixture out{model.manifold.subset(parts), model.priors, {}};
  out.components.reserve(model.size());
  for (const Gaussian& g : model.components) out.components.push_back(marginal(g, parts));
  return out;
}

GmrResult gmr(const GaussianMixture& model, const JointPartition& partition, const Point& x_in,
              const IterOptions& options) {
  model.validate();
  const Manifold out_m = model.manifold.subset(partition.output_parts);
  const auto k = static_cast<Index>(model.size());

  std::vector<Gaussian> conditionals;
  conditionals.reserve(model.size());
  VectorXd log_act(k);
  for (Index j = 0; j < k; ++j) {
    const Gaussian& g = model.components[static_cast<std::size_t>(j)];
    conditionals.push_back(condition(g, partition, x_in, options).gaussian);
    log_act(j) = std::log(model.priors(j));
    if (!partition.input_parts.empty())
      log_act(j) += log_density(marginal(g, partition.input_parts), x_in);
  }
  VectorXd act = (log_act.array() - log_sum_exp(log_act)).exp();
  act /= act.sum();

  std::vector<Point> means;
  for (const Gaussian& c : conditionals) means.push_back(c.mean);
  // Unregularized: its covariance is exactly sum_k h_k v_k v_k^T.
  MeanResult centre = karcher_mean(WeightedDataset::weighted(out_m, std::move(means), act), options,
                                   /*regularize=*/false);
  MatrixXd cov = centre.gaussian.cov;
  for (Index j = 0; j < k; ++j) {
    const Gaussian& c = conditionals[static_cast<std::size_t>(j)];
    cov += act(j) * out_m.transport_cov(c.mean, centre.gaussian.mean, c.cov);
  }
  return {{out_m, std::move(centre.gaussian.mean), linalg::symmetrize(cov)}, std::move(act)};
}

}  // namespace riemstat
