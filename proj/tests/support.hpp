#pragma once

// Random generators shared by the unit and acceptance suites.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "riemstat/linalg.hpp"
#include "riemstat/manifold.hpp"

namespace riemstat::testing {

using Rng = std::mt19937_64;

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random chart vector whose norm on each factor is uniform in [0, fraction *
// min(injectivity radius, cap)].
inline Tangent random_tangent(const Manifold& m, Rng& rng, double fraction = 0.9, double cap = 3.0) {
  Tangent u(m.dim());
  for (std::size_t i = 0; i < m.num_parts(); ++i) {
    const Factor& f = m.factor(i);
    double limit = cap;
    if (f.kind == Kind::Sphere) limit = std::min(limit, M_PI);
    if (f.kind == Kind::Grassmann) limit = std::min(limit, M_PI / 2.0);
    Eigen::VectorXd dir = gaussian_vector(f.dim(), rng);
    dir.normalize();
    u.segment(m.tangent_offset(i), f.dim()) = uniform(rng, 0.0, fraction * limit) * dir;
  }
  return u;
}

inline Point random_point(const Manifold& m, Rng& rng) {
  Point x(m.ambient_dim());
  for (std::size_t i = 0; i < m.num_parts(); ++i) {
    const Factor& f = m.factor(i);
    auto dst = x.segment(m.ambient_offset(i), f.ambient_dim());
    switch (f.kind) {
      case Kind::Euclidean:
        dst = gaussian_vector(f.n, rng, 2.0);
        break;
      case Kind::Sphere:
        dst = gaussian_vector(f.n + 1, rng).normalized();
        break;
      case Kind::Hyperbolic: {
        const Manifold h = Manifold::hyperbolic(f.n);
        Point origin = Point::Zero(f.n + 1);
        origin(f.n) = 1.0;
        dst = h.exp(origin, random_tangent(h, rng, 1.0, 1.5));
        break;
      }
      case Kind::Spd: {
        const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(
            gaussian_vector(f.n * f.n, rng).data(), f.n, f.n);
        dst = linalg::flatten(a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(f.n, f.n));
        break;
      }
      case Kind::Grassmann:
        dst = Manifold::grassmann(f.n, f.k).project(gaussian_vector(f.n * f.k, rng));
        break;
    }
  }
  return x;
}

// Random point within the injectivity radius of x (safe pair for log).
inline Point random_neighbour(const Manifold& m, const Point& x, Rng& rng, double fraction = 0.9) {
  return m.exp(x, random_tangent(m, rng, fraction));
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, Rng& rng, double floor = 0.1) {
  const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(gaussian_vector(n * n, rng).data(), n, n);
  return a * a.transpose() / static_cast<double>(n) + floor * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace riemstat::testing
