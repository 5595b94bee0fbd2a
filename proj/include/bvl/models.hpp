#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "bvl/rng.hpp"
#include "bvl/state.hpp"

namespace bvl {

// Holonomic rover motion: x' = x + u*dt + w. Motion noise is Gaussian with
// per-axis std affine in the commanded speed, sigma_i = sigma_w*|u_i|*dt + sigma_w_bias.
struct MotionModel {
  double dt = 0.005;
  double sigma_w = 0.05;       // noise growth per unit control magnitude
  double sigma_w_bias = 0.002; // noise floor std
  double v_max = 1.0;          // per-axis speed bound

  double step_length() const { return v_max * dt; }
};

// Range-bearing sensing of point landmarks. Noise std grows linearly with
// distance: sigma_r = xi_r*d + sigma_rb, sigma_th = xi_theta*d + sigma_tb.
// Landmarks beyond sensing_range produce no reading.
struct ObservationModel {
  double xi_r = 0.1;
  double xi_theta = 0.05;
  double sigma_rb = 0.01;
  double sigma_tb = 0.01;
  double sensing_range = 6.0;

  double range_std(double d) const { return xi_r * d + sigma_rb; }
  double bearing_std(double d) const { return xi_theta * d + sigma_tb; }
};

struct Landmark {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

using LandmarkSet = std::vector<Landmark>;

struct Reading {
  int landmark_id = 0;
  double range = 0.0;
  double bearing = 0.0;  // wrapped, relative to heading
};

struct Observation {
  std::vector<Reading> readings;

  bool empty() const { return readings.empty(); }
};

// EKF loses rank-3 observability with zero landmarks, so environments keep
// modest landmark counts; fixed capacity lets the filter avoid heap traffic.
inline constexpr int kMaxVisibleLandmarks = 12;

// x' = x + u*dt + w, theta wrapped. Controls exceeding v_max are clamped
// (clamped_flag, when given, reports that).
State propagate(const State& x, const Control& u, const Eigen::Vector3d& w,
                const MotionModel& m, bool* clamped_flag = nullptr);

// Motion noise covariance Q_w(u) = diag((sigma_w*|u_i|*dt + sigma_w_bias)^2).
Eigen::Matrix3d motion_noise_cov(const Control& u, const MotionModel& m);

// Noisy range-bearing readings for all landmarks within sensing range,
// nearest first, at most kMaxVisibleLandmarks. A landmark coincident with the
// robot is skipped.
Observation observe(const State& x, const LandmarkSet& lms, const ObservationModel& m, Rng& rng);

// Noise-free readings (the measurement function h).
Observation observe_noiseless(const State& x, const LandmarkSet& lms, const ObservationModel& m);

struct Linearization {
  Eigen::Matrix3d A;   // df/dx (identity for the holonomic model)
  Eigen::Matrix3d Qw;  // motion noise covariance at (x, u)
  // Stacked over visible landmarks, two rows (range, bearing) per landmark.
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3> H;
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1> R_diag;
  std::vector<int> visible_ids;
};

Linearization linearize(const State& x, const Control& u, const LandmarkSet& lms,
                        const MotionModel& mm, const ObservationModel& om);

// One step of the sampling-based generative model: draw motion noise,
// propagate, then observe at the new state.
std::pair<State, Observation> generative_step(const State& x, const Control& u,
                                              const LandmarkSet& lms, const MotionModel& mm,
                                              const ObservationModel& om, Rng& rng);

}  // namespace bvl
