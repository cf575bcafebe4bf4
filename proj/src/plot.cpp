#include "riemstat/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>

#include "riemstat/errors.hpp"
#include "riemstat/io.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat::plot {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

constexpr double kSize = 640.0;
constexpr double kMargin = 40.0;
constexpr int kContourSteps = 96;

const std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

const char* color(int i) { return kPalette[static_cast<std::size_t>(std::abs(i)) % kPalette.size()]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v == 0.0 ? 0.0 : v);
  return buf;
}

// A projected point; `front` is false for hidden parts of a curved view.
struct Screen {
  Vector2d p;
  bool front = true;
};

class Svg {
 public:
  Svg(double xmin, double xmax, double ymin, double ymax) : x0_(xmin), y1_(ymax) {
    const double span = std::max(xmax - xmin, ymax - ymin);
    scale_ = (kSize - 2 * kMargin) / (span > 0.0 ? span : 1.0);
    // Center the shorter axis.
    ox_ = kMargin + 0.5 * ((kSize - 2 * kMargin) - scale_ * (xmax - xmin));
    oy_ = kMargin + 0.5 * ((kSize - 2 * kMargin) - scale_ * (ymax - ymin));
  }

  double sx(double x) const { return ox_ + scale_ * (x - x0_); }
  double sy(double y) const { return oy_ + scale_ * (y1_ - y); }
  double scale() const { return scale_; }

  void raw(const std::string& s) { body_ += s; }

  void polyline(const std::vector<Vector2d>& pts, const std::string& stroke, double width,
                bool dashed = false, double opacity = 1.0, bool closed = false) {
    if (pts.size() < 2) return;
    body_ += closed ? "<polygon" : "<polyline";
    body_ += " fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"";
    if (dashed) body_ += " stroke-dasharray=\"6,4\"";
    if (opacity < 1.0) body_ += " stroke-opacity=\"" + num(opacity) + "\"";
    body_ += " points=\"";
    for (const Vector2d& p : pts) body_ += num(sx(p.x())) + "," + num(sy(p.y())) + " ";
    body_ += "\"/>\n";
  }

  void circle(const Vector2d& c, double r_px, const std::string& fill, double opacity = 1.0,
              const std::string& stroke = "none") {
    body_ += "<circle cx=\"" + num(sx(c.x())) + "\" cy=\"" + num(sy(c.y())) + "\" r=\"" + num(r_px) +
             "\" fill=\"" + fill + "\"";
    if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
    if (stroke != "none") body_ += " stroke=\"" + stroke + "\" stroke-width=\"1.5\"";
    body_ += "/>\n";
  }

  void text(double px, double py, const std::string& s, int size = 16) {
    body_ += "<text x=\"" + num(px) + "\" y=\"" + num(py) + "\" font-family=\"sans-serif\" font-size=\"" +
             std::to_string(size) + "\">" + s + "</text>\n";
  }

  std::string str(const std::string& title, double width = kSize, double height = kSize) const {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                      num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
      out += "<text x=\"" + num(kMargin) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
             title + "</text>\n";
    return out + body_ + "</svg>\n";
  }

 private:
  double x0_, y1_, scale_ = 1.0, ox_ = 0.0, oy_ = 0.0;
  std::string body_;
};

using Projection = std::function<Screen(const Point&)>;

// Orthographic view of the unit sphere looking along `view`.
Projection sphere_view(const Vector3d& view) {
  Vector3d up = std::abs(view.z()) < 0.9 ? Vector3d::UnitZ() : Vector3d::UnitY();
  const Vector3d e1 = up.cross(view).normalized();
  const Vector3d e2 = view.cross(e1);
  return [=](const Point& x) { return Screen{{x.dot(e1), x.dot(e2)}, x.dot(view) >= 0.0}; };
}

Projection poincare() {
  return [](const Point& x) { return Screen{{x(0) / (1.0 + x(2)), x(1) / (1.0 + x(2))}, true}; };
}

// [[a, b], [b, c]] in coordinates where the cone is w >= |(u, v)|, then an
// oblique view with the cone axis pointing up.
Vector3d cone_coords(const Point& x) {
  const double a = x(0), b = x(1), c = x(3);
  return {(a - c) / std::numbers::sqrt2, std::numbers::sqrt2 * b, (a + c) / std::numbers::sqrt2};
}

Vector2d oblique(const Vector3d& q) { return {q.x() - 0.45 * q.y(), q.z() - 0.25 * q.y()}; }

Projection spd_cone() {
  return [](const Point& x) { return Screen{oblique(cone_coords(x)), true}; };
}

Projection plane() {
  return [](const Point& x) { return Screen{{x(0), x(1)}, true}; };
}

// One-sigma contour; for three-dimensional charts the plane of the two
// leading principal directions.
std::vector<Point> contour(const Gaussian& g) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(g.cov));
  const Eigen::Index d = g.cov.rows();
  const VectorXd a = eig.eigenvectors().col(d - 1) * std::sqrt(std::max(eig.eigenvalues()(d - 1), 0.0));
  const VectorXd b = d > 1 ? VectorXd(eig.eigenvectors().col(d - 2) * std::sqrt(std::max(eig.eigenvalues()(d - 2), 0.0)))
                           : VectorXd::Zero(d);
  std::vector<Point> out;
  for (int i = 0; i <= kContourSteps; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kContourSteps;
    out.push_back(g.manifold.exp(g.mean, std::cos(t) * a + std::sin(t) * b));
  }
  return out;
}

// Split a projected curve into runs of equal visibility.
void draw_curve(Svg& svg, const std::vector<Screen>& pts, const std::string& stroke, double width,
                bool dashed) {
  std::vector<Vector2d> run;
  bool front = pts.empty() || pts.front().front;
  for (const Screen& s : pts) {
    if (s.front != front && !run.empty()) {
      run.push_back(s.p);
      svg.polyline(run, stroke, width, dashed || !front, front ? 1.0 : 0.35);
      run = {s.p};
      front = s.front;
      continue;
    }
    run.push_back(s.p);
  }
  svg.polyline(run, stroke, width, dashed || !front, front ? 1.0 : 0.35);
}

Vector3d scene_view(const Scene& scene) {
  Vector3d sum = Vector3d::Zero();
  for (const Point& p : scene.points) sum += p.head<3>();
  for (const auto& e : scene.ellipses) sum += e.gaussian.mean.head<3>();
  for (const auto& path : scene.paths)
    for (const Point& p : path.points) sum += p.head<3>();
  for (const Point& p : scene.markers) sum += p.head<3>();
  if (sum.norm() < 1e-9) return Vector3d(1, 1, 1).normalized();
  return sum.normalized();
}

}  // namespace

bool supported(const Manifold& m) {
  if (m.num_parts() != 1) return false;
  const Factor& f = m.factor(0);
  return (f.kind == Kind::Sphere || f.kind == Kind::Hyperbolic || f.kind == Kind::Spd ||
          f.kind == Kind::Euclidean) &&
         f.n == 2;
}

void write_svg(const std::filesystem::path& path, const Manifold& m, const Scene& scene) {
  if (!supported(m)) throw InputError("no plot view for " + m.to_string());
  const Kind kind = m.factor(0).kind;

  Projection project;
  if (kind == Kind::Sphere) project = sphere_view(scene_view(scene));
  if (kind == Kind::Hyperbolic) project = poincare();
  if (kind == Kind::Spd) project = spd_cone();
  if (kind == Kind::Euclidean) project = plane();

  std::vector<std::vector<Screen>> contours;
  for (const auto& e : scene.ellipses) {
    std::vector<Screen> c;
    for (const Point& p : contour(e.gaussian)) c.push_back(project(p));
    contours.push_back(std::move(c));
  }

  // Frame: fixed for the bounded views, data-driven otherwise.
  double xmin = -1.05, xmax = 1.05, ymin = -1.05, ymax = 1.05;
  std::optional<double> cone_top;
  if (kind == Kind::Spd || kind == Kind::Euclidean) {
    xmin = ymin = std::numeric_limits<double>::infinity();
    xmax = ymax = -xmin;
    auto grow = [&](const Vector2d& p) {
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    };
    for (const Point& p : scene.points) grow(project(p).p);
    for (const auto& c : contours)
      for (const Screen& s : c) grow(s.p);
    for (const auto& path : scene.paths)
      for (const Point& p : path.points) grow(project(p).p);
    for (const Point& p : scene.markers) grow(project(p).p);
    if (!std::isfinite(xmin)) xmin = ymin = -1.0, xmax = ymax = 1.0;
    if (kind == Kind::Spd) {
      double top = 0.0;
      for (const Point& p : scene.points) top = std::max(top, cone_coords(p).z());
      for (const auto& e : scene.ellipses) top = std::max(top, 1.3 * cone_coords(e.gaussian.mean).z());
      cone_top = top > 0.0 ? top : 1.0;
      grow(oblique({0, 0, 0}));
      grow(oblique({-*cone_top, 0, *cone_top}));
      grow(oblique({*cone_top, 0, *cone_top}));
      grow(oblique({0, -*cone_top, *cone_top}));
      grow(oblique({0, *cone_top, *cone_top}));
    }
    const double pad = 0.05 * std::max({xmax - xmin, ymax - ymin, 1e-9});
    xmin -= pad, xmax += pad, ymin -= pad, ymax += pad;
  }
  Svg svg(xmin, xmax, ymin, ymax);

  // Background geometry.
  if (kind == Kind::Sphere || kind == Kind::Hyperbolic) {
    std::vector<Vector2d> rim;
    for (int i = 0; i < 180; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 180;
      rim.push_back({std::cos(t), std::sin(t)});
    }
    svg.polyline(rim, "#444444", 1.5, false, 1.0, true);
  }
  if (cone_top) {
    std::vector<Vector2d> rim;
    for (int i = 0; i < 180; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 180;
      rim.push_back(oblique({*cone_top * std::cos(t), *cone_top * std::sin(t), *cone_top}));
    }
    svg.polyline(rim, "#888888", 1.0, false, 1.0, true);
    svg.polyline({oblique({0, 0, 0}), oblique({-*cone_top, 0, *cone_top})}, "#888888", 1.0);
    svg.polyline({oblique({0, 0, 0}), oblique({*cone_top, 0, *cone_top})}, "#888888", 1.0);
  }

  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Screen s = project(scene.points[i]);
    const int label = scene.labels.empty() ? 7 : scene.labels[i];
    svg.circle(s.p, 2.5, scene.labels.empty() ? "#555555" : color(label), s.front ? 0.8 : 0.25);
  }
  for (std::size_t i = 0; i < contours.size(); ++i) {
    const auto& e = scene.ellipses[i];
    draw_curve(svg, contours[i], color(e.color), 2.5, e.dashed);
    const Screen c = project(e.gaussian.mean);
    svg.circle(c.p, 4.0, color(e.color), c.front ? 1.0 : 0.35);
  }
  for (const auto& path : scene.paths) {
    std::vector<Screen> pts;
    for (const Point& p : path.points) pts.push_back(project(p));
    draw_curve(svg, pts, color(path.color), 2.0, false);
  }
  for (const Point& p : scene.markers) {
    const Screen s = project(p);
    svg.circle(s.p, 6.0, "none", 1.0, "#000000");
  }
  io::write_text(path, svg.str(scene.title));
}

void write_spd_series(const std::filesystem::path& path, const SpdSeries& series) {
  if (series.data_time.size() != series.data.size() || series.model_time.size() != series.model.size())
    throw InputError("SPD series needs one time stamp per matrix");
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, radius = 0.0;
  auto grow = [&](double t, const Eigen::Matrix2d& x) {
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    radius = std::max(radius, std::sqrt(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(x).eigenvalues().maxCoeff()));
  };
  for (std::size_t i = 0; i < series.data.size(); ++i) grow(series.data_time[i], series.data[i]);
  for (std::size_t i = 0; i < series.model.size(); ++i) grow(series.model_time[i], series.model[i]);
  if (!std::isfinite(tmin)) throw InputError("empty SPD series");
  if (tmax == tmin) tmax = tmin + 1.0;

  // Ellipses are scaled so the largest one spans about a tenth of the axis.
  const double s = 0.1 * (tmax - tmin) / std::max(radius, 1e-12);
  const double half = 1.3 * s * radius;
  Svg svg(tmin - half, tmax + half, -half, half);
  auto ellipse = [&](double t, const Eigen::Matrix2d& x) {
    const Eigen::Matrix2d root = linalg::sym_sqrt(x);
    std::vector<Vector2d> pts;
    for (int i = 0; i < kContourSteps; ++i) {
      const double a = 2.0 * std::numbers::pi * i / kContourSteps;
      pts.push_back(Vector2d(t, 0.0) + s * root * Vector2d(std::cos(a), std::sin(a)));
    }
    return pts;
  };
  for (std::size_t i = 0; i < series.data.size(); ++i)
    svg.polyline(ellipse(series.data_time[i], series.data[i]), "#999999", 0.8, false, 0.6, true);
  for (std::size_t i = 0; i < series.model.size(); ++i)
    svg.polyline(ellipse(series.model_time[i], series.model[i]), color(1), 2.0, false, 1.0, true);
  svg.polyline({{tmin - half, -half}, {tmax + half, -half}}, "#444444", 1.0);
  io::write_text(path, svg.str(series.title));
}

}  // namespace riemstat::plot
