#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riemstat {

// A point is stored in ambient coordinates, matrix-valued factors flattened
// row-major and product factors concatenated.
using Point = Eigen::VectorXd;
// Tangent vectors are stored as coordinates in the deterministic orthonormal
// chart attached to their base point (see Manifold::chart_basis).
using Tangent = Eigen::VectorXd;

enum class Kind { Euclidean, Sphere, Hyperbolic, Spd, Grassmann };

// One non-product factor. `n` is the defining size (R^n, S^n, H^n, S^n_++,
// G(n, k)); `k` is only meaningful for the Grassmannian.
struct Factor {
  Kind kind;
  int n;
  int k = 0;

  int dim() const;
  int ambient_dim() const;
  std::string to_string() const;
  bool operator==(const Factor&) const = default;
};

// A Riemannian manifold, possibly a Cartesian product. Nested products are
// flattened, so a Manifold is always a non-empty list of factors.
//
// All member functions are pure; a Manifold is an immutable value.
class Manifold {
 public:
  static Manifold euclidean(int d);
  static Manifold sphere(int d);
  static Manifold hyperbolic(int d);
  static Manifold spd(int d);
  static Manifold grassmann(int d, int p);
  static Manifold product(const std::vector<Manifold>& parts);

  // Parses `sphere:2`, `grassmann:4,2`, `product[euclidean:2,sphere:2]`, ...
  // Throws ParseError.
  static Manifold parse(std::string_view text);
  std::string to_string() const;

  int dim() const { return dim_; }
  int ambient_dim() const { return ambient_dim_; }
  std::size_t num_parts() const { return factors_.size(); }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }
  Eigen::Index ambient_offset(std::size_t i) const { return ambient_offsets_.at(i); }
  Eigen::Index tangent_offset(std::size_t i) const { return tangent_offsets_.at(i); }

  // Sub-manifold made of the selected factors (in the given order) and the
  // matching gather/scatter helpers on points and chart coordinates.
  Manifold subset(std::span<const std::size_t> parts) const;
  Point gather_point(const Point& x, std::span<const std::size_t> parts) const;
  std::vector<Eigen::Index> tangent_indices(std::span<const std::size_t> parts) const;

  // Columns are the ambient chart directions at x; orthonormal for the metric.
  Eigen::MatrixXd chart_basis(const Point& x) const;
  Eigen::VectorXd to_ambient(const Point& x, const Tangent& u) const;
  Tangent to_chart(const Point& x, const Eigen::VectorXd& ambient) const;
  double ambient_inner(const Point& x, const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  Point exp(const Point& x, const Tangent& u) const;
  // Throws CutLocusError when y lies on (or numerically at) the cut locus of x.
  Tangent log(const Point& x, const Point& y) const;
  double dist(const Point& x, const Point& y) const;

  // Parallel transport along the minimizing geodesic from g to h.
  Tangent transport(const Point& g, const Point& h, const Tangent& v) const;
  // Matrix of transport in chart coordinates: transport(g, h, v) == map * v.
  Eigen::MatrixXd transport_map(const Point& g, const Point& h) const;
  Eigen::MatrixXd transport_cov(const Point& g, const Point& h, const Eigen::MatrixXd& cov) const;

  // Nearest valid point; throws DegenerateInputError.
  Point project(const Eigen::VectorXd& x) const;
  // Checks the point invariants of every factor within tol.
  bool contains(const Point& x, double tol = 1e-9) const;

  // Smallest injectivity radius over the factors (infinity for flat and
  // negatively curved ones).
  double injectivity_radius() const;

  bool operator==(const Manifold& other) const { return factors_ == other.factors_; }

 private:
  explicit Manifold(std::vector<Factor> factors);

  std::vector<Factor> factors_;
  std::vector<Eigen::Index> ambient_offsets_;
  std::vector<Eigen::Index> tangent_offsets_;
  int dim_ = 0;
  int ambient_dim_ = 0;
};

}  // namespace riemstat
