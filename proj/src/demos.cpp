#include "riemstat/demos.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat::demos {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Anisotropic chart covariance with standard deviations (s1, s2) and a
// random orientation.
MatrixXd oriented_cov(double s1, double s2, std::mt19937_64& rng) {
  const double a = std::uniform_real_distribution<double>(0.0, std::numbers::pi)(rng);
  Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r * Eigen::Vector2d(s1 * s1, s2 * s2).asDiagonal() * r.transpose();
}

void append(io::Dataset& data, const std::vector<Point>& pts, int label) {
  for (const Point& p : pts) {
    data.points.push_back(p);
    data.labels->push_back(label);
  }
}

}  // namespace

Point on_sphere(double polar, double azimuth) {
  Point p(3);
  p << std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar);
  return p;
}

// ------------------------------------------------------------------- fig1

Fig1 fig1(std::uint64_t seed, const IterOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  const Manifold s2 = Manifold::sphere(2);
  Gaussian a{s2, on_sphere(0.7 + jitter(rng), 0.1 + jitter(rng)), oriented_cov(0.35, 0.08, rng)};
  Gaussian b{s2, on_sphere(1.1 + jitter(rng), 0.9 + jitter(rng)), oriented_cov(0.30, 0.10, rng)};
  const std::vector<Gaussian> both{a, b};
  FuseResult fused = fuse(both, options);
  return {std::move(a), std::move(b), std::move(fused)};
}

// ------------------------------------------------------------------- fig4

io::Dataset fig4_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Manifold s2 = Manifold::sphere(2);
  io::Dataset data{s2, {}, std::vector<int>{}, std::nullopt};
  // Clusters from near the pole to well below the equator.
  const double polar[] = {40 * kDeg, 95 * kDeg, 135 * kDeg};
  const double azimuth[] = {0 * kDeg, 110 * kDeg, 220 * kDeg};
  for (int c = 0; c < 3; ++c) {
    const Gaussian g{s2, on_sphere(polar[c], azimuth[c]), oriented_cov(0.25, 0.08, rng)};
    append(data, sample(g, 80, rng()), c);
  }
  return data;
}

Fig4 fig4(std::uint64_t seed, const EmOptions& options) {
  io::Dataset data = fig4_dataset(seed);
  const Manifold s2 = data.manifold;
  Point origin(3);
  origin << 0, 0, 1;

  EmOptions o = options;
  o.k = 3;
  EmResult proposed = em_fit(data.weighted(), o);

  const Manifold plane = Manifold::euclidean(2);
  std::vector<Point> chart;
  for (const Point& x : data.points) chart.push_back(s2.log(origin, x));
  EmResult baseline = em_fit(WeightedDataset::uniform(plane, chart), o);

  Fig4 out{std::move(data), origin, std::move(proposed), std::move(baseline)};
  const Manifold& sphere = out.data.manifold;
  const auto n = static_cast<double>(out.data.points.size());
  for (std::size_t i = 0; i < out.data.points.size(); ++i) {
    out.proposed_loglik += out.proposed.model.log_density(out.data.points[i]) / n;
    out.baseline_loglik += out.baseline.model.log_density(chart[i]) / n;
    for (std::size_t j = i + 1; j < out.data.points.size(); ++j)
      out.spread = std::max(out.spread, sphere.dist(out.data.points[i], out.data.points[j]));
  }
  return out;
}

// ------------------------------------------------------------------- fig5

Matrix2d fig5_curve(double t) {
  const double angle = 0.8 * std::numbers::pi * t;
  Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const Eigen::Vector2d eig(std::exp(0.3 + 0.8 * std::sin(std::numbers::pi * t)), std::exp(-0.6 + 0.7 * t));
  return r * eig.asDiagonal() * r.transpose();
}

io::Dataset fig5_dataset(std::uint64_t seed, double noise) {
  const Manifold joint = Manifold::parse("product[euclidean:1,spd:2]");
  const Manifold spd = Manifold::spd(2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  io::Dataset data{joint, {}, std::vector<int>{}, std::nullopt};
  constexpr int kDemos = 4, kSamples = 50;
  for (int d = 0; d < kDemos; ++d) {
    for (int i = 0; i < kSamples; ++i) {
      const double t = static_cast<double>(i) / (kSamples - 1);
      const Point c = linalg::flatten(fig5_curve(t));
      VectorXd v(3);
      for (int j = 0; j < 3; ++j) v(j) = noise * normal(rng);
      Point x(5);
      x << t, spd.exp(c, v);
      data.points.push_back(std::move(x));
      data.labels->push_back(d);
    }
  }
  return data;
}

Fig5 fig5(std::uint64_t seed, const EmOptions& options) {
  constexpr double kNoise = 0.1;
  io::Dataset data = fig5_dataset(seed, kNoise);
  EmOptions o = options;
  o.k = 6;
  EmResult model = em_fit(data.weighted(), o);
  const auto part = JointPartition::from_inputs(data.manifold, {0});
  Fig5 out{std::move(data), kNoise, std::move(model), {}, {}};
  constexpr int kQueries = 50;
  for (int i = 0; i < kQueries; ++i) {
    const double t = static_cast<double>(i) / (kQueries - 1);
    out.query_time.push_back(t);
    out.predictions.push_back(gmr(out.model.model, part, VectorXd::Constant(1, t), o.mean_options));
  }
  return out;
}

// ------------------------------------------------------------------- fig6

Fig6 fig6_scenario(std::uint64_t seed, const EmOptions& options) {
  std::mt19937_64 rng(seed);
  const Manifold s2 = Manifold::sphere(2);
  const std::vector<Point> via{on_sphere(0.6, -0.4), on_sphere(1.2, 0.7), on_sphere(0.9, 1.9)};
  const double spread[][2] = {{0.15, 0.05}, {0.12, 0.06}, {0.06, 0.04}};

  io::Dataset data{s2, {}, std::vector<int>{}, std::nullopt};
  for (int c = 0; c < 3; ++c) {
    const Gaussian g{s2, via[static_cast<std::size_t>(c)], oriented_cov(spread[c][0], spread[c][1], rng)};
    append(data, sample(g, 60, rng()), c);
  }
  EmOptions o = options;
  o.k = 3;
  const EmResult fit = em_fit(data.weighted(), o);

  // Order components along the demonstrated path.
  GaussianMixture ordered{s2, VectorXd(3), {}};
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k)
      if (s2.dist(fit.model.components[k].mean, via[c]) < s2.dist(fit.model.components[best].mean, via[c]))
        best = k;
    for (const Gaussian& taken : ordered.components)
      if (taken.mean == fit.model.components[best].mean)
        throw NumericalError("demonstration clusters were not separated by EM");
    ordered.components.push_back(fit.model.components[best]);
    ordered.priors(static_cast<Eigen::Index>(c)) = fit.model.priors(static_cast<Eigen::Index>(best));
  }

  // Window of a fifth of the horizon; r is large enough against Q dt^2 that
  // the state glides between viapoints instead of jumping.
  constexpr int kHorizon = 90;
  MpcSettings settings;
  settings.window = kHorizon / 5;
  settings.dt = 0.01;
  settings.r = 0.1;
  return {std::move(data), via, StepwiseReference::equal_segments(std::move(ordered), kHorizon), settings,
          on_sphere(0.25, -2.0), kHorizon};
}

}  // namespace riemstat::demos
