#include "riemstat/manifold.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Below this norm a tangent vector (or a separation) is treated as zero.
constexpr double kTiny = 1e-12;
// Angular margin to the sphere antipode / Grassmann principal angle pi/2.
constexpr double kCutMargin = 1e-6;
constexpr double kSpdEigenFloor = 1e-12;

// ---------------------------------------------------------------- Euclidean

namespace euclidean {

MatrixXd basis(Index n) { return MatrixXd::Identity(n, n); }

}  // namespace euclidean

// ------------------------------------------------------------------- Sphere

namespace sphere {

// Householder reflection sending the last axis to +-x (the sign avoids
// cancellation); its first d columns span the tangent space at x.
MatrixXd basis(const VectorXd& x) {
  const Index d = x.size() - 1;
  VectorXd w = x;
  w(d) += x(d) >= 0.0 ? 1.0 : -1.0;
  const double ww = w.squaredNorm();
  MatrixXd b(d + 1, d);
  for (Index i = 0; i < d; ++i) {
    b.col(i) = (-2.0 * w(i) / ww) * w;
    b(i, i) += 1.0;
  }
  return b;
}

struct Separation {
  VectorXd direction;  // unnormalized component of y orthogonal to x
  double angle;
};

Separation separation(const VectorXd& x, const VectorXd& y) {
  const double c = x.dot(y);
  VectorXd w = y - c * x;
  const double angle = std::atan2(w.norm(), c);
  return {std::move(w), angle};
}

VectorXd log_ambient(const VectorXd& x, const VectorXd& y) {
  const Separation s = separation(x, y);
  if (s.angle > std::numbers::pi - kCutMargin)
    throw CutLocusError("sphere log: points are antipodal");
  const double norm = s.direction.norm();
  if (norm < kTiny) return VectorXd::Zero(x.size());
  return (s.angle / norm) * s.direction;
}

Point exp(const VectorXd& x, const VectorXd& u_coords) {
  const double norm = u_coords.norm();
  if (norm < kTiny) return x;
  const VectorXd u = basis(x) * u_coords;
  return std::cos(norm) * x + (std::sin(norm) / norm) * u;
}

MatrixXd transport(const VectorXd& g, const VectorXd& h, const MatrixXd& coords) {
  const VectorXd u = log_ambient(g, h);
  const double theta2 = u.squaredNorm();
  MatrixXd v = basis(g) * coords;
  if (theta2 >= kTiny * kTiny) {
    const VectorXd back = log_ambient(h, g);
    v -= ((u + back) / theta2) * (u.transpose() * v);
  }
  return basis(h).transpose() * v;
}

Point project(const VectorXd& x) {
  const double norm = x.norm();
  if (norm == 0.0) throw DegenerateInputError("sphere projection of the zero vector");
  return x / norm;
}

}  // namespace sphere

// --------------------------------------------------------------- Hyperbolic

namespace hyperbolic {

double minkowski(const VectorXd& a, const VectorXd& b) {
  const Index d = a.size() - 1;
  return a.head(d).dot(b.head(d)) - a(d) * b(d);
}

// Lorentz boost sending the last axis to x; first d columns span T_x.
MatrixXd basis(const VectorXd& x) {
  const Index d = x.size() - 1;
  const VectorXd xs = x.head(d);
  const double scale = 1.0 / (1.0 + x(d));
  MatrixXd b(d + 1, d);
  for (Index i = 0; i < d; ++i) {
    b.col(i).head(d) = (scale * xs(i)) * xs;
    b(i, i) += 1.0;
    b(d, i) = xs(i);
  }
  return b;
}

MatrixXd to_chart(const VectorXd& x, const MatrixXd& ambient) {
  MatrixXd flipped = ambient;
  flipped.row(ambient.rows() - 1) *= -1.0;
  return basis(x).transpose() * flipped;
}

VectorXd log_ambient(const VectorXd& x, const VectorXd& y) {
  const double ip = minkowski(x, y);
  const VectorXd w = y + ip * x;
  const double norm = std::sqrt(std::max(minkowski(w, w), 0.0));
  if (norm < kTiny) return VectorXd::Zero(x.size());
  return (std::asinh(norm) / norm) * w;
}

double dist(const VectorXd& x, const VectorXd& y) {
  const double ip = minkowski(x, y);
  const VectorXd w = y + ip * x;
  return std::asinh(std::sqrt(std::max(minkowski(w, w), 0.0)));
}

Point exp(const VectorXd& x, const VectorXd& u_coords) {
  const double norm = u_coords.norm();
  if (norm < kTiny) return x;
  const VectorXd u = basis(x) * u_coords;
  return std::cosh(norm) * x + (std::sinh(norm) / norm) * u;
}

MatrixXd transport(const VectorXd& g, const VectorXd& h, const MatrixXd& coords) {
  const VectorXd u = log_ambient(g, h);
  const double theta2 = minkowski(u, u);
  MatrixXd v = basis(g) * coords;
  if (theta2 >= kTiny * kTiny) {
    const VectorXd back = log_ambient(h, g);
    VectorXd gu = u;
    gu(gu.size() - 1) *= -1.0;
    v -= ((u + back) / theta2) * (gu.transpose() * v);
  }
  return to_chart(h, v);
}

Point project(const VectorXd& x) {
  const double q = minkowski(x, x);
  if (!(q < 0.0)) throw DegenerateInputError("hyperbolic projection of a non-timelike vector");
  VectorXd y = x / std::sqrt(-q);
  if (y(y.size() - 1) < 0.0) y = -y;
  return y;
}

}  // namespace hyperbolic

// ---------------------------------------------------------------------- SPD

namespace spd {

struct Roots {
  MatrixXd sqrt;
  MatrixXd inv_sqrt;
};

Roots roots(const MatrixXd& x) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(x));
  const MatrixXd& q = eig.eigenvectors();
  const VectorXd s = eig.eigenvalues().cwiseSqrt();
  return {linalg::symmetrize(q * s.asDiagonal() * q.transpose()),
          linalg::symmetrize(q * s.cwiseInverse().asDiagonal() * q.transpose())};
}

MatrixXd as_matrix(const VectorXd& x, int n) { return linalg::unflatten(x, n, n); }

// Log at X in chart coordinates never needs the ambient tangent: the chart
// at X is congruence by X^{1/2} of the Mandel basis at the identity.
MatrixXd whitened(const Roots& rx, const MatrixXd& y) {
  return linalg::symmetrize(rx.inv_sqrt * y * rx.inv_sqrt);
}

MatrixXd basis(const VectorXd& x, int n) {
  const Roots r = roots(as_matrix(x, n));
  const Index dim = n * (n + 1) / 2;
  MatrixXd b(n * n, dim);
  for (Index k = 0; k < dim; ++k) {
    b.col(k) = linalg::flatten(r.sqrt * linalg::unmandel(VectorXd::Unit(dim, k), n) * r.sqrt);
  }
  return b;
}

VectorXd to_ambient(const VectorXd& x, int n, const VectorXd& coords) {
  const Roots r = roots(as_matrix(x, n));
  return linalg::flatten(r.sqrt * linalg::unmandel(coords, n) * r.sqrt);
}

VectorXd to_chart(const VectorXd& x, int n, const VectorXd& ambient) {
  const Roots r = roots(as_matrix(x, n));
  return linalg::mandel(r.inv_sqrt * linalg::unflatten(ambient, n, n) * r.inv_sqrt);
}

double inner(const VectorXd& x, int n, const VectorXd& a, const VectorXd& b) {
  const MatrixXd xi = linalg::spd_inverse(as_matrix(x, n));
  return (xi * linalg::unflatten(a, n, n) * xi * linalg::unflatten(b, n, n)).trace();
}

Point exp(const VectorXd& x, int n, const VectorXd& coords) {
  if (coords.norm() < kTiny) return x;
  const Roots r = roots(as_matrix(x, n));
  return linalg::flatten(
      linalg::symmetrize(r.sqrt * linalg::sym_exp(linalg::unmandel(coords, n)) * r.sqrt));
}

VectorXd log(const VectorXd& x, const VectorXd& y, int n) {
  const Roots r = roots(as_matrix(x, n));
  return linalg::mandel(linalg::sym_log(whitened(r, as_matrix(y, n))));
}

// Parallel transport along the affine-invariant geodesic,
// V -> E V E^T with E = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}.
// In the charts at X and Y this is congruence by the orthogonal matrix
// C = Y^{-1/2} X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2}.
MatrixXd transport(const VectorXd& g, const VectorXd& h, int n, const MatrixXd& coords) {
  const Roots rg = roots(as_matrix(g, n));
  const Roots rh = roots(as_matrix(h, n));
  const MatrixXd c = rh.inv_sqrt * rg.sqrt * linalg::sym_sqrt(whitened(rg, as_matrix(h, n)));
  MatrixXd out(coords.rows(), coords.cols());
  for (Index j = 0; j < coords.cols(); ++j) {
    out.col(j) = linalg::mandel(c * linalg::unmandel(coords.col(j), n) * c.transpose());
  }
  return out;
}

Point project(const VectorXd& x, int n) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(as_matrix(x, n)));
  const VectorXd values = eig.eigenvalues().cwiseMax(kSpdEigenFloor);
  const MatrixXd& q = eig.eigenvectors();
  return linalg::flatten(linalg::symmetrize(q * values.asDiagonal() * q.transpose()));
}

bool contains(const VectorXd& x, int n, double tol) {
  const MatrixXd m = as_matrix(x, n);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(linalg::symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0) > 0.0;
}

}  // namespace spd

// ---------------------------------------------------------------- Grassmann

namespace grassmann {

MatrixXd frame(const VectorXd& x, int n, int k) { return linalg::unflatten(x, n, k); }

// Orthonormal completion of the frame, deterministic through Householder QR.
MatrixXd complement(const MatrixXd& x) {
  Eigen::HouseholderQR<MatrixXd> qr(x);
  const MatrixXd q = qr.householderQ();
  return q.rightCols(x.rows() - x.cols());
}

VectorXd to_ambient(const MatrixXd& x, const VectorXd& coords) {
  const Index n = x.rows(), k = x.cols();
  return linalg::flatten(complement(x) * linalg::unflatten(coords, n - k, k));
}

VectorXd to_chart(const MatrixXd& x, const MatrixXd& tangent) {
  return linalg::flatten(complement(x).transpose() * tangent);
}

MatrixXd basis(const MatrixXd& x) {
  const Index n = x.rows(), k = x.cols();
  const MatrixXd xc = complement(x);
  MatrixXd b(n * k, (n - k) * k);
  for (Index i = 0; i < n - k; ++i) {
    for (Index j = 0; j < k; ++j) {
      MatrixXd e = MatrixXd::Zero(n, k);
      e.col(j) = xc.col(i);
      b.col(i * k + j) = linalg::flatten(e);
    }
  }
  return b;
}

MatrixXd exp_frame(const MatrixXd& x, const MatrixXd& h) {
  Eigen::JacobiSVD<MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const MatrixXd& v = svd.matrixV();
  return (x * v * s.array().cos().matrix().asDiagonal() +
          svd.matrixU() * s.array().sin().matrix().asDiagonal()) *
         v.transpose();
}

// Horizontal tangent at x pointing to span(y), or throws on the cut locus.
MatrixXd log_frame(const MatrixXd& x, const MatrixXd& y) {
  const MatrixXd m = x.transpose() * y;
  Eigen::JacobiSVD<MatrixXd> cosines(m);
  if (cosines.singularValues().minCoeff() <= std::sin(kCutMargin))
    throw CutLocusError("grassmann log: principal angle reaches pi/2");
  const MatrixXd t = m.transpose().partialPivLu().solve((y - x * m).transpose()).transpose();
  Eigen::JacobiSVD<MatrixXd> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.singularValues().array().atan().matrix().asDiagonal() *
         svd.matrixV().transpose();
}

double dist(const MatrixXd& x, const MatrixXd& y) {
  const MatrixXd m = x.transpose() * y;
  Eigen::JacobiSVD<MatrixXd> cosines(m);
  if (cosines.singularValues().minCoeff() <= std::sin(kCutMargin)) {
    // arccos loses accuracy for small angles only; here the angles are large.
    return cosines.singularValues().unaryExpr([](double c) {
      return std::acos(std::clamp(c, -1.0, 1.0));
    }).norm();
  }
  return log_frame(x, y).norm();
}

// Transport along the geodesic, then realignment of the result to the stored
// representative of h (the geodesic ends at h up to a right rotation).
MatrixXd transport(const MatrixXd& g, const MatrixXd& h, const MatrixXd& coords) {
  const Index n = g.rows(), k = g.cols();
  const MatrixXd direction = log_frame(g, h);
  MatrixXd op = MatrixXd::Identity(n, n);
  MatrixXd end = g;
  if (direction.norm() >= kTiny) {
    Eigen::JacobiSVD<MatrixXd> svd(direction, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const MatrixXd& u = svd.matrixU();
    const MatrixXd& v = svd.matrixV();
    const auto s = svd.singularValues().array();
    op = -g * v * s.sin().matrix().asDiagonal() * u.transpose() +
         u * s.cos().matrix().asDiagonal() * u.transpose() + MatrixXd::Identity(n, n) -
         u * u.transpose();
    end = exp_frame(g, direction);
  }
  const MatrixXd align = end.transpose() * h;
  const MatrixXd gc = complement(g);
  const MatrixXd hc = complement(h);
  MatrixXd out(coords.rows(), coords.cols());
  for (Index j = 0; j < coords.cols(); ++j) {
    const MatrixXd tangent = gc * linalg::unflatten(coords.col(j), n - k, k);
    out.col(j) = linalg::flatten(hc.transpose() * op * tangent * align);
  }
  return out;
}

Point project(const VectorXd& x, int n, int k) {
  const MatrixXd a = frame(x, n, k);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd& r = qr.matrixQR();
  const double scale = std::max(1.0, a.norm());
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, k);
  for (Index j = 0; j < k; ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale)
      throw DegenerateInputError("grassmann projection of a rank-deficient frame");
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return linalg::flatten(q);
}

}  // namespace grassmann

// ----------------------------------------------------------- spec parsing

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  Manifold parse_all() {
    Manifold m = parse_one();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters");
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("invalid manifold spec '" + std::string(text_) + "': " + why);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    skip_space();
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected an integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  Manifold parse_one() {
    const std::string kind = word();
    if (kind == "product") {
      expect('[');
      std::vector<Manifold> parts{parse_one()};
      while (accept(',')) parts.push_back(parse_one());
      expect(']');
      return Manifold::product(parts);
    }
    expect(':');
    const int n = integer();
    if (kind == "euclidean") return Manifold::euclidean(n);
    if (kind == "sphere") return Manifold::sphere(n);
    if (kind == "hyperbolic") return Manifold::hyperbolic(n);
    if (kind == "spd") return Manifold::spd(n);
    if (kind == "grassmann") {
      expect(',');
      return Manifold::grassmann(n, integer());
    }
    fail("unknown manifold kind '" + kind + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

// ------------------------------------------------------------------ Factor

int Factor::dim() const {
  switch (kind) {
    case Kind::Euclidean:
    case Kind::Sphere:
    case Kind::Hyperbolic:
      return n;
    case Kind::Spd:
      return n * (n + 1) / 2;
    case Kind::Grassmann:
      return k * (n - k);
  }
  return 0;
}

int Factor::ambient_dim() const {
  switch (kind) {
    case Kind::Euclidean:
      return n;
    case Kind::Sphere:
    case Kind::Hyperbolic:
      return n + 1;
    case Kind::Spd:
      return n * n;
    case Kind::Grassmann:
      return n * k;
  }
  return 0;
}

std::string Factor::to_string() const {
  switch (kind) {
    case Kind::Euclidean:
      return "euclidean:" + std::to_string(n);
    case Kind::Sphere:
      return "sphere:" + std::to_string(n);
    case Kind::Hyperbolic:
      return "hyperbolic:" + std::to_string(n);
    case Kind::Spd:
      return "spd:" + std::to_string(n);
    case Kind::Grassmann:
      return "grassmann:" + std::to_string(n) + "," + std::to_string(k);
  }
  return {};
}

// ---------------------------------------------------------------- Manifold

Manifold::Manifold(std::vector<Factor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DimensionMismatchError("a manifold needs at least one factor");
  for (const Factor& f : factors_) {
    ambient_offsets_.push_back(ambient_dim_);
    tangent_offsets_.push_back(dim_);
    ambient_dim_ += f.ambient_dim();
    dim_ += f.dim();
  }
}

Manifold Manifold::euclidean(int d) {
  if (d < 1) throw ParseError("euclidean dimension must be >= 1");
  return Manifold({Factor{Kind::Euclidean, d}});
}

Manifold Manifold::sphere(int d) {
  if (d < 1) throw ParseError("sphere dimension must be >= 1");
  return Manifold({Factor{Kind::Sphere, d}});
}

Manifold Manifold::hyperbolic(int d) {
  if (d < 1) throw ParseError("hyperbolic dimension must be >= 1");
  return Manifold({Factor{Kind::Hyperbolic, d}});
}

Manifold Manifold::spd(int d) {
  if (d < 1) throw ParseError("spd dimension must be >= 1");
  return Manifold({Factor{Kind::Spd, d}});
}

Manifold Manifold::grassmann(int d, int p) {
  if (p < 1 || p >= d) throw ParseError("grassmann requires 1 <= p < d");
  return Manifold({Factor{Kind::Grassmann, d, p}});
}

Manifold Manifold::product(const std::vector<Manifold>& parts) {
  std::vector<Factor> factors;
  for (const Manifold& m : parts) factors.insert(factors.end(), m.factors_.begin(), m.factors_.end());
  return Manifold(std::move(factors));
}

Manifold Manifold::parse(std::string_view text) { return SpecParser(text).parse_all(); }

std::string Manifold::to_string() const {
  if (factors_.size() == 1) return factors_.front().to_string();
  std::string out = "product[";
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i > 0) out += ",";
    out += factors_[i].to_string();
  }
  return out + "]";
}

Manifold Manifold::subset(std::span<const std::size_t> parts) const {
  std::vector<Factor> factors;
  for (std::size_t i : parts) factors.push_back(factor(i));
  return Manifold(std::move(factors));
}

Point Manifold::gather_point(const Point& x, std::span<const std::size_t> parts) const {
  Index size = 0;
  for (std::size_t i : parts) size += factor(i).ambient_dim();
  Point out(size);
  Index at = 0;
  for (std::size_t i : parts) {
    const Index len = factor(i).ambient_dim();
    out.segment(at, len) = x.segment(ambient_offset(i), len);
    at += len;
  }
  return out;
}

std::vector<Index> Manifold::tangent_indices(std::span<const std::size_t> parts) const {
  std::vector<Index> out;
  for (std::size_t i : parts) {
    for (Index j = 0; j < factor(i).dim(); ++j) out.push_back(tangent_offset(i) + j);
  }
  return out;
}

MatrixXd Manifold::chart_basis(const Point& x) const {
  MatrixXd out = MatrixXd::Zero(ambient_dim_, dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    MatrixXd b;
    switch (f.kind) {
      case Kind::Euclidean:
        b = euclidean::basis(f.n);
        break;
      case Kind::Sphere:
        b = sphere::basis(xi);
        break;
      case Kind::Hyperbolic:
        b = hyperbolic::basis(xi);
        break;
      case Kind::Spd:
        b = spd::basis(xi, f.n);
        break;
      case Kind::Grassmann:
        b = grassmann::basis(grassmann::frame(xi, f.n, f.k));
        break;
    }
    out.block(ambient_offsets_[i], tangent_offsets_[i], f.ambient_dim(), f.dim()) = b;
  }
  return out;
}

VectorXd Manifold::to_ambient(const Point& x, const Tangent& u) const {
  VectorXd out(ambient_dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd ui = u.segment(tangent_offsets_[i], f.dim());
    auto dst = out.segment(ambient_offsets_[i], f.ambient_dim());
    switch (f.kind) {
      case Kind::Euclidean:
        dst = ui;
        break;
      case Kind::Sphere:
        dst = sphere::basis(xi) * ui;
        break;
      case Kind::Hyperbolic:
        dst = hyperbolic::basis(xi) * ui;
        break;
      case Kind::Spd:
        dst = spd::to_ambient(xi, f.n, ui);
        break;
      case Kind::Grassmann:
        dst = grassmann::to_ambient(grassmann::frame(xi, f.n, f.k), ui);
        break;
    }
  }
  return out;
}

Tangent Manifold::to_chart(const Point& x, const VectorXd& ambient) const {
  Tangent out(dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd ai = ambient.segment(ambient_offsets_[i], f.ambient_dim());
    auto dst = out.segment(tangent_offsets_[i], f.dim());
    switch (f.kind) {
      case Kind::Euclidean:
        dst = ai;
        break;
      case Kind::Sphere:
        dst = sphere::basis(xi).transpose() * ai;
        break;
      case Kind::Hyperbolic:
        dst = hyperbolic::to_chart(xi, ai);
        break;
      case Kind::Spd:
        dst = spd::to_chart(xi, f.n, ai);
        break;
      case Kind::Grassmann: {
        const MatrixXd frame = grassmann::frame(xi, f.n, f.k);
        dst = grassmann::to_chart(frame, linalg::unflatten(ai, f.n, f.k));
        break;
      }
    }
  }
  return out;
}

double Manifold::ambient_inner(const Point& x, const VectorXd& a, const VectorXd& b) const {
  double total = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const Index off = ambient_offsets_[i];
    const Index len = f.ambient_dim();
    switch (f.kind) {
      case Kind::Euclidean:
      case Kind::Sphere:
      case Kind::Grassmann:
        total += a.segment(off, len).dot(b.segment(off, len));
        break;
      case Kind::Hyperbolic:
        total += hyperbolic::minkowski(a.segment(off, len), b.segment(off, len));
        break;
      case Kind::Spd:
        total += spd::inner(x.segment(off, len), f.n, a.segment(off, len), b.segment(off, len));
        break;
    }
  }
  return total;
}

Point Manifold::exp(const Point& x, const Tangent& u) const {
  Point out(ambient_dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd ui = u.segment(tangent_offsets_[i], f.dim());
    auto dst = out.segment(ambient_offsets_[i], f.ambient_dim());
    switch (f.kind) {
      case Kind::Euclidean:
        dst = xi + ui;
        break;
      case Kind::Sphere:
        dst = sphere::exp(xi, ui);
        break;
      case Kind::Hyperbolic:
        dst = hyperbolic::exp(xi, ui);
        break;
      case Kind::Spd:
        dst = spd::exp(xi, f.n, ui);
        break;
      case Kind::Grassmann: {
        if (ui.norm() < kTiny) {
          dst = xi;
          break;
        }
        const MatrixXd frame = grassmann::frame(xi, f.n, f.k);
        const MatrixXd h = linalg::unflatten(grassmann::to_ambient(frame, ui), f.n, f.k);
        dst = linalg::flatten(grassmann::exp_frame(frame, h));
        break;
      }
    }
  }
  return out;
}

Tangent Manifold::log(const Point& x, const Point& y) const {
  Tangent out(dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd yi = y.segment(ambient_offsets_[i], f.ambient_dim());
    auto dst = out.segment(tangent_offsets_[i], f.dim());
    if (f.kind != Kind::Euclidean && (yi - xi).norm() < kTiny) {
      dst.setZero();
      continue;
    }
    switch (f.kind) {
      case Kind::Euclidean:
        dst = yi - xi;
        break;
      case Kind::Sphere:
        dst = sphere::basis(xi).transpose() * sphere::log_ambient(xi, yi);
        break;
      case Kind::Hyperbolic:
        dst = hyperbolic::to_chart(xi, hyperbolic::log_ambient(xi, yi));
        break;
      case Kind::Spd:
        dst = spd::log(xi, yi, f.n);
        break;
      case Kind::Grassmann: {
        const MatrixXd gx = grassmann::frame(xi, f.n, f.k);
        const MatrixXd h = grassmann::log_frame(gx, grassmann::frame(yi, f.n, f.k));
        dst = h.norm() < kTiny ? VectorXd::Zero(f.dim()) : grassmann::to_chart(gx, h);
        break;
      }
    }
  }
  return out;
}

double Manifold::dist(const Point& x, const Point& y) const {
  double total = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd yi = y.segment(ambient_offsets_[i], f.ambient_dim());
    double d = 0.0;
    switch (f.kind) {
      case Kind::Euclidean:
        d = (yi - xi).norm();
        break;
      case Kind::Sphere:
        d = sphere::separation(xi, yi).angle;
        break;
      case Kind::Hyperbolic:
        d = hyperbolic::dist(xi, yi);
        break;
      case Kind::Spd:
        d = spd::log(xi, yi, f.n).norm();
        break;
      case Kind::Grassmann:
        d = grassmann::dist(grassmann::frame(xi, f.n, f.k), grassmann::frame(yi, f.n, f.k));
        break;
    }
    if (factors_.size() == 1) return d;
    total += d * d;
  }
  return std::sqrt(total);
}

MatrixXd Manifold::transport_map(const Point& g, const Point& h) const {
  MatrixXd out = MatrixXd::Zero(dim_, dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd gi = g.segment(ambient_offsets_[i], f.ambient_dim());
    const VectorXd hi = h.segment(ambient_offsets_[i], f.ambient_dim());
    const MatrixXd eye = MatrixXd::Identity(f.dim(), f.dim());
    MatrixXd block;
    switch (f.kind) {
      case Kind::Euclidean:
        block = eye;
        break;
      case Kind::Sphere:
        block = sphere::transport(gi, hi, eye);
        break;
      case Kind::Hyperbolic:
        block = hyperbolic::transport(gi, hi, eye);
        break;
      case Kind::Spd:
        block = spd::transport(gi, hi, f.n, eye);
        break;
      case Kind::Grassmann:
        block = grassmann::transport(grassmann::frame(gi, f.n, f.k),
                                     grassmann::frame(hi, f.n, f.k), eye);
        break;
    }
    out.block(tangent_offsets_[i], tangent_offsets_[i], f.dim(), f.dim()) = block;
  }
  return out;
}

Tangent Manifold::transport(const Point& g, const Point& h, const Tangent& v) const {
  return transport_map(g, h) * v;
}

MatrixXd Manifold::transport_cov(const Point& g, const Point& h, const MatrixXd& cov) const {
  const MatrixXd a = transport_map(g, h);
  return linalg::symmetrize(a * cov * a.transpose());
}

Point Manifold::project(const VectorXd& x) const {
  if (x.size() != ambient_dim_)
    throw DimensionMismatchError("point has " + std::to_string(x.size()) +
                                 " ambient coordinates, expected " + std::to_string(ambient_dim_));
  Point out(ambient_dim_);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    auto dst = out.segment(ambient_offsets_[i], f.ambient_dim());
    switch (f.kind) {
      case Kind::Euclidean:
        dst = xi;
        break;
      case Kind::Sphere:
        dst = sphere::project(xi);
        break;
      case Kind::Hyperbolic:
        dst = hyperbolic::project(xi);
        break;
      case Kind::Spd:
        dst = spd::project(xi, f.n);
        break;
      case Kind::Grassmann:
        dst = grassmann::project(xi, f.n, f.k);
        break;
    }
  }
  return out;
}

bool Manifold::contains(const Point& x, double tol) const {
  if (x.size() != ambient_dim_ || !x.allFinite()) return false;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    const VectorXd xi = x.segment(ambient_offsets_[i], f.ambient_dim());
    switch (f.kind) {
      case Kind::Euclidean:
        break;
      case Kind::Sphere:
        if (std::abs(xi.norm() - 1.0) > tol) return false;
        break;
      case Kind::Hyperbolic:
        if (std::abs(hyperbolic::minkowski(xi, xi) + 1.0) > tol || xi(f.n) <= 0.0) return false;
        break;
      case Kind::Spd:
        if (!spd::contains(xi, f.n, tol)) return false;
        break;
      case Kind::Grassmann: {
        const MatrixXd frame = grassmann::frame(xi, f.n, f.k);
        const MatrixXd gram = frame.transpose() * frame - MatrixXd::Identity(f.k, f.k);
        if (gram.cwiseAbs().maxCoeff() > tol) return false;
        break;
      }
    }
  }
  return true;
}

double Manifold::injectivity_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (const Factor& f : factors_) {
    if (f.kind == Kind::Sphere) r = std::min(r, std::numbers::pi);
    if (f.kind == Kind::Grassmann) r = std::min(r, std::numbers::pi / 2.0);
  }
  return r;
}

}  // namespace riemstat
