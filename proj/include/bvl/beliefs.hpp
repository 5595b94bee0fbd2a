#pragma once

#include <Eigen/Dense>

#include "bvl/models.hpp"
#include "bvl/state.hpp"

namespace bvl {

// Gaussian belief over the rover pose. The covariance is kept symmetric by
// construction; filter steps re-symmetrize to control numerical drift.
struct GaussianBelief {
  State mean;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

inline void symmetrize(Eigen::Matrix3d& p) { p = 0.5 * (p + p.transpose()).eval(); }

bool belief_is_valid(const GaussianBelief& b);

// Per-step cost c(b, u) = xi_p * tr(P) + xi_T * dt.
struct CostWeights {
  double xi_p = 10.0;
  double xi_T = 1.0;
  double dt = 0.005;
};

double step_cost(const GaussianBelief& b, const CostWeights& w);

// Composite belief metric: weighted Euclidean distance on (x, y, wrapped
// dtheta) plus xi_sigma times the Frobenius distance between covariances.
struct BeliefMetric {
  double wx = 1.0;
  double wy = 1.0;
  double w_theta = 0.5;   // meters per radian
  double xi_sigma = 1.0;
};

double belief_distance(const GaussianBelief& a, const GaussianBelief& b, const BeliefMetric& m);

struct EkfInfo {
  bool regularized = false;  // innovation covariance needed an epsilon*I bump
};

// Prediction half of the Bayesian belief update:
// mean' = f(mean, u, 0), cov' = A cov A^T + Q_w(u).
// Throws std::invalid_argument on non-finite inputs.
GaussianBelief ekf_predict(const GaussianBelief& b, const Control& u, const MotionModel& m);

// Correction half. Innovations on bearing components are wrapped before the
// gain is applied; the covariance update uses the Joseph form. Readings whose
// landmark id is unknown are ignored.
GaussianBelief ekf_update(const GaussianBelief& b, const Observation& z, const ObservationModel& m,
                          const LandmarkSet& landmarks, EkfInfo* info = nullptr);

// Draw a state from the belief (mean + chol(cov) * n, theta wrapped).
State sample_state(const GaussianBelief& b, Rng& rng);

}  // namespace bvl
