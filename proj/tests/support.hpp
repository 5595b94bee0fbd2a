#pragma once

#include <cmath>
#include <string>

#include "bvl/beliefs.hpp"
#include "bvl/models.hpp"
#include "bvl/rng.hpp"
#include "bvl/world.hpp"

namespace bvl::test {

// Models with every noise term zeroed; the generative pipeline becomes
// deterministic under these.
inline MotionModel zero_noise_motion(double dt = 0.005, double v_max = 10.0) {
  MotionModel m;
  m.dt = dt;
  m.v_max = v_max;
  m.sigma_w = 0.0;
  m.sigma_w_bias = 0.0;
  return m;
}

inline ObservationModel zero_noise_observation(double sensing_range = 100.0) {
  ObservationModel m;
  m.xi_r = 0.0;
  m.xi_theta = 0.0;
  m.sigma_rb = 0.0;
  m.sigma_tb = 0.0;
  m.sensing_range = sensing_range;
  return m;
}

// Empty square world with landmarks in the corners.
inline Environment open_environment(double side = 10.0) {
  Environment env;
  env.xmax = side;
  env.ymax = side;
  env.robot_radius = 0.2;
  env.start = {0.15 * side, 0.15 * side, 0.0};
  env.goal = {0.85 * side, 0.85 * side, 0.0};
  double in = 0.5;
  env.landmarks = {{0, in, in},
                   {1, side - in, in},
                   {2, side - in, side - in},
                   {3, in, side - in}};
  return env;
}

inline GaussianBelief make_belief(double x, double y, double theta, double var_xy = 0.01,
                                  double var_theta = 0.005) {
  GaussianBelief b;
  b.mean = {x, y, theta};
  b.cov = Eigen::Vector3d(var_xy, var_xy, var_theta).asDiagonal();
  return b;
}

inline GaussianBelief random_belief(Rng& rng, double span = 10.0) {
  GaussianBelief b;
  b.mean = {rng.uniform(0.0, span), rng.uniform(0.0, span), rng.uniform(-kPi, kPi)};
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = rng.normal(0.0, 0.1);
  }
  b.cov = a * a.transpose();
  return b;
}

}  // namespace bvl::test
