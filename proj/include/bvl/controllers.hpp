#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "bvl/beliefs.hpp"
#include "bvl/models.hpp"
#include "bvl/state.hpp"
#include "bvl/world.hpp"

namespace bvl {

struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solution of the discrete algebraic Riccati equation for state feedback:
// S = Wx + A^T S A - A^T S B (Wu + B^T S B)^{-1} B^T S A, L the optimal gain.
struct DareSolution {
  Eigen::Matrix3d gain;         // L
  Eigen::Matrix3d cost_matrix;  // S
  double residual = 0.0;        // ||S - Ric(S)||_F at convergence
  double closed_loop_radius = 0.0;  // spectral radius of A - B L
};

// Iterates the Riccati map to its fixed point. Throws SynthesisError if the
// residual does not fall below 1e-8 within 10^4 iterations or the closed loop
// is not strictly stable.
DareSolution solve_dare(const Eigen::Matrix3d& A, const Eigen::Matrix3d& B,
                        const Eigen::Matrix3d& Wx, const Eigen::Matrix3d& Wu);

// Fixed point of the filter Riccati recursion (predict-then-update covariance
// map) for the system (A, H) with noises (Qw, R diag). Throws SynthesisError
// on divergence or non-convergence.
Eigen::Matrix3d stationary_filter_covariance(
    const Eigen::Matrix3d& A,
    const Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3>& H,
    const Eigen::Matrix3d& Qw,
    const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1>& R_diag);

// LQG weights for controller synthesis.
struct LqgWeights {
  Eigen::Matrix3d Wx = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d Wu = 0.1 * Eigen::Matrix3d::Identity();
};

// Stationary belief-stabilizing controller at a target state: the feedback
// law u = clamp(-L (mean - target)) drives beliefs toward (target, P_c).
struct StationaryLqg {
  State target;
  Eigen::Matrix3d gain;                        // L
  Eigen::Matrix3d stationary_cov;              // P_c
};

Control apply_stabilizer(const StationaryLqg& c, const GaussianBelief& b, double v_max);

// Saturated feedback toward a target pose with a shared gain; used for the
// controller menus of the online planners where per-target synthesis would be
// wasteful (the holonomic linearization is state independent).
Control goto_law(const State& target, const GaussianBelief& b, const Eigen::Matrix3d& gain,
                 double v_max);

// Time-varying tracker along a straight nominal from vi to vj plus the
// terminal stabilizer at vj. The nominal is stored in constant-control
// segments and expanded on demand; with the holonomic model the tracking gain
// is time invariant.
struct EdgeController {
  struct Segment {
    Control u;
    int steps = 0;
  };
  State from;
  State to;
  double dt = 0.005;
  std::vector<Segment> segments;
  Eigen::Matrix3d gain;  // tracking and terminal gain

  int nominal_steps() const {
    int n = 0;
    for (const Segment& s : segments) n += s.steps;
    return n;
  }

  // Nominal state and control at step k (k past the nominal returns the
  // terminal pose with zero control).
  State nominal_state(int k) const;
  Control nominal_control(int k) const;
};

// Synthesizes the node-stabilizing controller for a sampled state: shared
// feedback gain plus the stationary covariance from the local observation
// linearization. Throws SynthesisError when the local system is unobservable
// (no landmark in range) or the recursion does not converge.
StationaryLqg make_node_controller(const State& v, const Environment& env, const MotionModel& mm,
                                   const ObservationModel& om, const LqgWeights& w);

struct EdgeRejectedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Straight-line edge controller from vi to vj: rotate toward the motion
// direction, translate at full speed, then hand over to the terminal
// stabilizer. Throws EdgeRejectedError if the swept nominal collides.
EdgeController make_edge_controller(const State& vi, const State& vj, const Environment& env,
                                    const MotionModel& mm, const LqgWeights& w);

// u = u_nominal(k) - L (mean - x_nominal(k)), clamped per axis; the
// stabilizer law once k is past the nominal.
Control apply_edge_controller(const EdgeController& c, const GaussianBelief& b, int k,
                              double v_max);

// Shared state-feedback gain for the holonomic model (A = I, B = dt I).
DareSolution holonomic_gain(const MotionModel& mm, const LqgWeights& w);

}  // namespace bvl
