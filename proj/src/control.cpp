#include "riemstat/control.hpp"

#include <algorithm>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void LinearSystem::validate() const {
  if (a.empty()) throw DimensionMismatchError("linear system needs a horizon of at least 2");
  if (a.size() != b.size()) throw DimensionMismatchError("A_t and B_t sequences differ in length");
  const Index d = state_dim(), m = control_dim();
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].rows() != d || a[t].cols() != d) throw DimensionMismatchError("A_t must be d x d");
    if (b[t].rows() != d || b[t].cols() != m) throw DimensionMismatchError("B_t must be d x m");
  }
}

LinearSystem LinearSystem::integrator(Index d, double dt, int horizon) {
  if (horizon < 2) throw DimensionMismatchError("horizon must be >= 2");
  LinearSystem sys;
  sys.a.assign(static_cast<std::size_t>(horizon - 1), MatrixXd::Identity(d, d));
  sys.b.assign(static_cast<std::size_t>(horizon - 1), dt * MatrixXd::Identity(d, d));
  return sys;
}

TransferMatrices build_transfer(const LinearSystem& sys) {
  sys.validate();
  const Index d = sys.state_dim(), m = sys.control_dim();
  const int horizon = sys.horizon();
  TransferMatrices tm{MatrixXd::Zero(d * horizon, d), MatrixXd::Zero(d * horizon, m * (horizon - 1))};
  tm.sx.topRows(d).setIdentity();
  for (int t = 1; t < horizon; ++t) {
    const auto step = static_cast<std::size_t>(t - 1);
    // Block row t: A_{t} times block row t-1, plus B_t entering at column t-1.
    tm.sx.middleRows(d * t, d) = sys.a[step] * tm.sx.middleRows(d * (t - 1), d);
    tm.su.middleRows(d * t, d) = sys.a[step] * tm.su.middleRows(d * (t - 1), d);
    tm.su.block(d * t, m * (t - 1), d, m) = sys.b[step];
  }
  return tm;
}

VectorXd simulate(const LinearSystem& sys, const VectorXd& x1, const VectorXd& u) {
  sys.validate();
  const Index d = sys.state_dim(), m = sys.control_dim();
  const int horizon = sys.horizon();
  if (x1.size() != d || u.size() != m * (horizon - 1))
    throw DimensionMismatchError("state or control vector has the wrong size");
  VectorXd x(d * horizon);
  x.head(d) = x1;
  for (int t = 1; t < horizon; ++t) {
    const auto step = static_cast<std::size_t>(t - 1);
    x.segment(d * t, d) = sys.a[step] * x.segment(d * (t - 1), d) + sys.b[step] * u.segment(m * (t - 1), m);
  }
  return x;
}

MatrixXd LqtWeights::q_matrix() const {
  Index total = 0;
  for (const MatrixXd& qt : q) total += qt.rows();
  MatrixXd out = MatrixXd::Zero(total, total);
  Index at = 0;
  for (const MatrixXd& qt : q) {
    out.block(at, at, qt.rows(), qt.cols()) = qt;
    at += qt.rows();
  }
  return out;
}

MatrixXd LqtWeights::r_matrix(Index control_dim) const {
  const auto n = static_cast<Index>(q.size() - 1) * control_dim;
  return r * MatrixXd::Identity(n, n);
}

VectorXd lqt_solve(const TransferMatrices& transfer, const LqtWeights& weights, const VectorXd& mu,
                   const VectorXd& x1) {
  const MatrixXd q = weights.q_matrix();
  const Index d = transfer.sx.cols();
  const Index m = transfer.su.cols() / std::max<Index>(1, static_cast<Index>(weights.q.size()) - 1);
  if (q.rows() != transfer.sx.rows() || mu.size() != q.rows() || x1.size() != d)
    throw DimensionMismatchError("LQT weights, reference and transfer matrices disagree");
  if (!(weights.r > 0.0)) throw InputError("control cost r must be positive");
  const MatrixXd& su = transfer.su;
  const MatrixXd lhs = su.transpose() * q * su + weights.r_matrix(m);
  Eigen::LLT<MatrixXd> llt(linalg::symmetrize(lhs));
  if (llt.info() != Eigen::Success) throw SingularSystemError("S_u^T Q S_u + R is not positive definite");
  return llt.solve(su.transpose() * q * (mu - transfer.sx * x1));
}

double lqt_objective(const TransferMatrices& transfer, const LqtWeights& weights, const VectorXd& mu,
                     const VectorXd& x1, const VectorXd& u) {
  const VectorXd e = transfer.sx * x1 + transfer.su * u - mu;
  return e.dot(weights.q_matrix() * e) + weights.r * u.squaredNorm();
}

StepwiseReference StepwiseReference::equal_segments(GaussianMixture gmm, int horizon) {
  if (horizon < 1) throw InputError("horizon must be >= 1");
  const auto k = static_cast<long>(gmm.size());
  StepwiseReference ref{std::move(gmm), {}};
  for (long t = 0; t < horizon; ++t) ref.sequence.push_back(static_cast<int>(t * k / horizon));
  return ref;
}

int StepwiseReference::component_at(int t) const {
  if (sequence.empty()) throw InputError("empty reference sequence");
  return sequence[static_cast<std::size_t>(std::clamp(t, 0, horizon() - 1))];
}

MatrixXd StepwiseReference::precision(int component) const {
  return linalg::spd_inverse(linalg::regularize(gmm.components.at(static_cast<std::size_t>(component)).cov));
}

void StepwiseReference::validate() const {
  gmm.validate();
  if (sequence.empty()) throw InputError("empty reference sequence");
  for (int s : sequence) {
    if (s < 0 || s >= static_cast<int>(gmm.size())) throw InputError("sequence refers to a missing component");
  }
}

MpcStep riemannian_mpc_step(const Manifold& m, const Point& state, const StepwiseReference& ref, int t,
                            const MpcSettings& settings) {
  int window = settings.window;
  if (settings.clip_to_horizon) window = std::min(window, ref.horizon() - t);
  if (window < 2) return {state, VectorXd::Zero(0)};

  const LinearSystem sys = settings.system ? *settings.system : LinearSystem::integrator(m.dim(), settings.dt, window);
  if (sys.horizon() != window || sys.state_dim() != m.dim())
    throw DimensionMismatchError("window system does not match the window or the manifold");
  const TransferMatrices transfer = build_transfer(sys);

  // Reference and precisions expressed in the chart at the current state,
  // where the state itself sits at the origin.
  const Index d = m.dim();
  LqtWeights weights{{}, settings.r};
  VectorXd mu(d * window);
  for (int j = 0; j < window; ++j) {
    const int s = ref.component_at(t + j);
    const Point& target = ref.gmm.components[static_cast<std::size_t>(s)].mean;
    mu.segment(d * j, d) = m.log(state, target);
    weights.q.push_back(m.transport_cov(target, state, ref.precision(s)));
  }
  const VectorXd u = lqt_solve(transfer, weights, mu, VectorXd::Zero(d));
  const VectorXd step = sys.b.front() * u.head(sys.control_dim());
  return {m.exp(state, step), u};
}

MpcRollout mpc_rollout(const Manifold& m, const Point& start, const StepwiseReference& ref,
                       const MpcSettings& settings, int steps) {
  if (steps < 1) throw InputError("rollout needs at least one step");
  ref.validate();
  MpcRollout out;
  auto record = [&](const Point& x, int t) {
    const int s = ref.component_at(t);
    out.states.push_back(x);
    out.active.push_back(s);
    out.viapoint_distance.push_back(m.dist(x, ref.gmm.components[static_cast<std::size_t>(s)].mean));
  };
  record(start, 0);
  for (int t = 0; t < steps; ++t) {
    MpcStep step = riemannian_mpc_step(m, out.states.back(), ref, t, settings);
    const Index cm = settings.system ? settings.system->control_dim() : m.dim();
    out.commands.push_back(step.commands.size() > 0 ? VectorXd(step.commands.head(cm)) : VectorXd::Zero(cm));
    record(step.next, t + 1);
  }
  return out;
}

}  // namespace riemstat
