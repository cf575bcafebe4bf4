#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "riemstat/control.hpp"
#include "riemstat/io.hpp"
#include "riemstat/mixture.hpp"

// Synthetic scenarios behind the `demo` subcommands. They are deterministic
// in the seed and shared with the acceptance suite.
namespace riemstat::demos {

Point on_sphere(double polar, double azimuth);

// Two Gaussians on the sphere and their product.
struct Fig1 {
  Gaussian a, b;
  FuseResult fused;
};
Fig1 fig1(std::uint64_t seed, const IterOptions& options = {});

// Clustering on the sphere: GMM with a tangent space per component versus
// a Euclidean GMM fitted in the single chart at the north pole.
struct Fig4 {
  io::Dataset data;
  Point origin;
  EmResult proposed;
  EmResult baseline;             // on euclidean:2, data = log(origin, x)
  double proposed_loglik = 0.0;  // mean per-point log-likelihood
  double baseline_loglik = 0.0;
  double spread = 0.0;  // largest pairwise geodesic distance in the data
};
io::Dataset fig4_dataset(std::uint64_t seed);
Fig4 fig4(std::uint64_t seed, const EmOptions& options);

// Regression from time to 2x2 SPD matrices on product[euclidean:1,spd:2].
struct Fig5 {
  io::Dataset data;
  double noise = 0.0;  // chart standard deviation of the generator noise
  EmResult model;
  std::vector<double> query_time;
  std::vector<GmrResult> predictions;
};
// Noise-free generator curve.
Eigen::Matrix2d fig5_curve(double t);
io::Dataset fig5_dataset(std::uint64_t seed, double noise);
Fig5 fig5(std::uint64_t seed, const EmOptions& options);

// Closed-loop MPC on the sphere tracking three viapoints learned from
// demonstrations.
struct Fig6 {
  io::Dataset data;
  std::vector<Point> viapoints;  // generator means, in visiting order
  StepwiseReference reference;
  MpcSettings settings;
  Point start;
  int steps = 0;
};
Fig6 fig6_scenario(std::uint64_t seed, const EmOptions& options);

}  // namespace riemstat::demos
