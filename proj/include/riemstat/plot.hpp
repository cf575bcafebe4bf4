#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "riemstat/gaussian.hpp"

namespace riemstat::plot {

// Everything drawn in one static figure. Colors are palette indices.
struct Scene {
  struct Ellipse {
    Gaussian gaussian;
    int color = 0;
    bool dashed = false;
  };
  struct Path {
    std::vector<Point> points;
    int color = 0;
  };

  std::string title;
  std::vector<Point> points;
  std::vector<int> labels;  // per point, empty for a single color
  std::vector<Ellipse> ellipses;
  std::vector<Path> paths;
  std::vector<Point> markers;
};

// Whether write_svg can draw points of this manifold.
bool supported(const Manifold& m);

// sphere:2 as an orthographic view, hyperbolic:2 on the Poincare disk,
// spd:2 inside the cone of 2x2 SPD matrices, euclidean:2 as a plane.
// Ellipses are one-standard-deviation contours pushed through exp.
// Throws InputError for other manifolds.
void write_svg(const std::filesystem::path& path, const Manifold& m, const Scene& scene);

// 2x2 SPD matrices drawn as ellipses along a scalar axis.
struct SpdSeries {
  std::string title;
  std::vector<double> data_time;
  std::vector<Eigen::Matrix2d> data;
  std::vector<double> model_time;
  std::vector<Eigen::Matrix2d> model;
};
void write_spd_series(const std::filesystem::path& path, const SpdSeries& series);

}  // namespace riemstat::plot
