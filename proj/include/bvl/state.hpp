#pragma once

#include <algorithm>
#include <cmath>

namespace bvl {

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Planar pose: position in meters, heading in radians wrapped to (-pi, pi].
struct State {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  State wrapped() const { return {x, y, wrap_angle(theta)}; }
};

inline double planar_distance(const State& a, const State& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Velocity command, one component per state coordinate.
struct Control {
  double vx = 0.0;
  double vy = 0.0;
  double vtheta = 0.0;

  double max_abs() const { return std::max({std::abs(vx), std::abs(vy), std::abs(vtheta)}); }
};

// Per-axis saturation to [-v_max, v_max].
inline Control clamp_control(const Control& u, double v_max) {
  auto clip = [v_max](double v) { return std::clamp(v, -v_max, v_max); };
  return {clip(u.vx), clip(u.vy), clip(u.vtheta)};
}

}  // namespace bvl
