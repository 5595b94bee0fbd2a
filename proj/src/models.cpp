#include "bvl/models.hpp"

#include <algorithm>
#include <cmath>

namespace bvl {

State propagate(const State& x, const Control& u, const Eigen::Vector3d& w,
                const MotionModel& m, bool* clamped_flag) {
  Control uc = clamp_control(u, m.v_max);
  if (clamped_flag != nullptr) {
    *clamped_flag = uc.vx != u.vx || uc.vy != u.vy || uc.vtheta != u.vtheta;
  }
  State out;
  out.x = x.x + uc.vx * m.dt + w.x();
  out.y = x.y + uc.vy * m.dt + w.y();
  out.theta = wrap_angle(x.theta + uc.vtheta * m.dt + w.z());
  return out;
}

Eigen::Matrix3d motion_noise_cov(const Control& u, const MotionModel& m) {
  auto sigma = [&m](double ui) {
    double s = m.sigma_w * std::abs(ui) * m.dt + m.sigma_w_bias;
    return s * s;
  };
  Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
  q(0, 0) = sigma(u.vx);
  q(1, 1) = sigma(u.vy);
  q(2, 2) = sigma(u.vtheta);
  return q;
}

namespace {

// Visible landmarks sorted by distance, nearest first; ties by id.
std::vector<std::pair<double, const Landmark*>> visible_landmarks(const State& x,
                                                                  const LandmarkSet& lms,
                                                                  const ObservationModel& m) {
  std::vector<std::pair<double, const Landmark*>> vis;
  vis.reserve(lms.size());
  for (const Landmark& lm : lms) {
    double d = std::hypot(lm.x - x.x, lm.y - x.y);
    if (d <= m.sensing_range && d > 0.0) vis.emplace_back(d, &lm);
  }
  std::sort(vis.begin(), vis.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->id < b.second->id;
  });
  if (vis.size() > static_cast<std::size_t>(kMaxVisibleLandmarks)) {
    vis.resize(kMaxVisibleLandmarks);
  }
  return vis;
}

}  // namespace

Observation observe_noiseless(const State& x, const LandmarkSet& lms, const ObservationModel& m) {
  Observation z;
  for (const auto& [d, lm] : visible_landmarks(x, lms, m)) {
    Reading r;
    r.landmark_id = lm->id;
    r.range = d;
    r.bearing = wrap_angle(std::atan2(lm->y - x.y, lm->x - x.x) - x.theta);
    z.readings.push_back(r);
  }
  return z;
}

Observation observe(const State& x, const LandmarkSet& lms, const ObservationModel& m, Rng& rng) {
  Observation z = observe_noiseless(x, lms, m);
  for (Reading& r : z.readings) {
    double d = r.range;
    r.range = std::max(1e-9, r.range + rng.normal(0.0, m.range_std(d)));
    r.bearing = wrap_angle(r.bearing + rng.normal(0.0, m.bearing_std(d)));
  }
  return z;
}

Linearization linearize(const State& x, const Control& u, const LandmarkSet& lms,
                        const MotionModel& mm, const ObservationModel& om) {
  Linearization lin;
  lin.A = Eigen::Matrix3d::Identity();
  lin.Qw = motion_noise_cov(u, mm);

  auto vis = visible_landmarks(x, lms, om);
  int n = static_cast<int>(vis.size());
  lin.H.resize(2 * n, 3);
  lin.R_diag.resize(2 * n);
  lin.visible_ids.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& [d, lm] = vis[i];
    double dx = lm->x - x.x;
    double dy = lm->y - x.y;
    // range = sqrt(dx^2 + dy^2), bearing = atan2(dy, dx) - theta
    lin.H(2 * i, 0) = -dx / d;
    lin.H(2 * i, 1) = -dy / d;
    lin.H(2 * i, 2) = 0.0;
    lin.H(2 * i + 1, 0) = dy / (d * d);
    lin.H(2 * i + 1, 1) = -dx / (d * d);
    lin.H(2 * i + 1, 2) = -1.0;
    double sr = om.range_std(d);
    double st = om.bearing_std(d);
    lin.R_diag(2 * i) = sr * sr;
    lin.R_diag(2 * i + 1) = st * st;
    lin.visible_ids.push_back(lm->id);
  }
  return lin;
}

std::pair<State, Observation> generative_step(const State& x, const Control& u,
                                              const LandmarkSet& lms, const MotionModel& mm,
                                              const ObservationModel& om, Rng& rng) {
  Eigen::Matrix3d q = motion_noise_cov(u, mm);
  Eigen::Vector3d w(rng.normal(0.0, std::sqrt(q(0, 0))), rng.normal(0.0, std::sqrt(q(1, 1))),
                    rng.normal(0.0, std::sqrt(q(2, 2))));
  State xp = propagate(x, u, w, mm);
  return {xp, observe(xp, lms, om, rng)};
}

}  // namespace bvl
