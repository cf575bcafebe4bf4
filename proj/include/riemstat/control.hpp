#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "riemstat/mixture.hpp"

namespace riemstat {

// x_{t+1} = A_t x_t + B_t u_t for t = 1 .. T-1.
struct LinearSystem {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::MatrixXd> b;

  int horizon() const { return static_cast<int>(a.size()) + 1; }
  Eigen::Index state_dim() const { return a.empty() ? 0 : a.front().rows(); }
  Eigen::Index control_dim() const { return b.empty() ? 0 : b.front().cols(); }
  // Throws DimensionMismatchError.
  void validate() const;

  // Single integrator A = I, B = dt I.
  static LinearSystem integrator(Eigen::Index d, double dt, int horizon);
};

// Stacked states x = S_x x_1 + S_u u.
struct TransferMatrices {
  Eigen::MatrixXd sx;  // dT x d
  Eigen::MatrixXd su;  // dT x m(T-1)
};

TransferMatrices build_transfer(const LinearSystem& sys);

// Step-by-step simulation, states stacked as [x_1; ...; x_T].
Eigen::VectorXd simulate(const LinearSystem& sys, const Eigen::VectorXd& x1,
                         const Eigen::VectorXd& u);

struct LqtWeights {
  std::vector<Eigen::MatrixXd> q;  // one d x d precision per timestep
  double r = 1.0;                  // isotropic control cost

  Eigen::MatrixXd q_matrix() const;
  Eigen::MatrixXd r_matrix(Eigen::Index control_dim) const;
};

// argmin_u ||x - mu||_Q^2 + ||u||_R^2 subject to x = S_x x1 + S_u u.
// Throws SingularSystemError when S_u^T Q S_u + R is not positive definite.
Eigen::VectorXd lqt_solve(const TransferMatrices& transfer, const LqtWeights& weights,
                          const Eigen::VectorXd& mu, const Eigen::VectorXd& x1);

double lqt_objective(const TransferMatrices& transfer, const LqtWeights& weights,
                     const Eigen::VectorXd& mu, const Eigen::VectorXd& x1,
                     const Eigen::VectorXd& u);

// GMM components used as viapoints along a horizon of T steps.
struct StepwiseReference {
  GaussianMixture gmm;
  std::vector<int> sequence;  // component index per timestep (0-based)

  // Equal-duration segments in component order.
  static StepwiseReference equal_segments(GaussianMixture gmm, int horizon);
  int horizon() const { return static_cast<int>(sequence.size()); }
  // Component active at timestep t; the last one is held past the horizon.
  int component_at(int t) const;
  // Q_k = (Sigma_k + lambda I)^{-1} with the usual covariance regularization.
  Eigen::MatrixXd precision(int component) const;
  void validate() const;
};

struct MpcSettings {
  int window = 10;      // states per window (window - 1 commands)
  double dt = 0.1;      // integrator step used when `system` is empty
  double r = 1e-3;
  // Shrink the window at the end of the horizon instead of holding the last
  // viapoint; receding-horizon re-solves then reproduce the open-loop plan.
  bool clip_to_horizon = false;
  std::optional<LinearSystem> system;  // in chart coordinates, horizon == window
};

struct MpcStep {
  Point next;
  Eigen::VectorXd commands;  // all window commands, first one applied
};

// One receding-horizon step at timestep t, solved in the chart at `state`.
MpcStep riemannian_mpc_step(const Manifold& m, const Point& state, const StepwiseReference& ref,
                            int t, const MpcSettings& settings);

struct MpcRollout {
  std::vector<Point> states;              // steps + 1
  std::vector<Eigen::VectorXd> commands;  // first command of each step
  std::vector<double> viapoint_distance;  // dist(x_t, active viapoint), steps + 1
  std::vector<int> active;                // active component per state
};

MpcRollout mpc_rollout(const Manifold& m, const Point& start, const StepwiseReference& ref,
                       const MpcSettings& settings, int steps);

}  // namespace riemstat
