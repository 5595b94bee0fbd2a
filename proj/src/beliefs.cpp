#include "bvl/beliefs.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace bvl {

bool belief_is_valid(const GaussianBelief& b) {
  if (!std::isfinite(b.mean.x) || !std::isfinite(b.mean.y) || !std::isfinite(b.mean.theta)) {
    return false;
  }
  if (!b.cov.allFinite()) return false;
  if ((b.cov - b.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(b.cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

double step_cost(const GaussianBelief& b, const CostWeights& w) {
  return w.xi_p * b.cov.trace() + w.xi_T * w.dt;
}

double belief_distance(const GaussianBelief& a, const GaussianBelief& b, const BeliefMetric& m) {
  double dx = m.wx * (a.mean.x - b.mean.x);
  double dy = m.wy * (a.mean.y - b.mean.y);
  double dth = m.w_theta * wrap_angle(a.mean.theta - b.mean.theta);
  double mean_part = std::sqrt(dx * dx + dy * dy + dth * dth);
  double cov_part = (a.cov - b.cov).norm();
  return mean_part + m.xi_sigma * cov_part;
}

GaussianBelief ekf_predict(const GaussianBelief& b, const Control& u, const MotionModel& m) {
  if (!belief_is_valid(b) || !std::isfinite(u.vx) || !std::isfinite(u.vy) ||
      !std::isfinite(u.vtheta)) {
    throw std::invalid_argument("ekf_predict: invalid belief or control");
  }
  GaussianBelief out;
  out.mean = propagate(b.mean, u, Eigen::Vector3d::Zero(), m);
  // A = I for the holonomic model.
  out.cov = b.cov + motion_noise_cov(clamp_control(u, m.v_max), m);
  symmetrize(out.cov);
  return out;
}

GaussianBelief ekf_update(const GaussianBelief& b, const Observation& z, const ObservationModel& m,
                          const LandmarkSet& landmarks, EkfInfo* info) {
  if (info != nullptr) info->regularized = false;
  if (z.empty()) return b;

  std::unordered_map<int, const Landmark*> by_id;
  by_id.reserve(landmarks.size());
  for (const Landmark& lm : landmarks) by_id.emplace(lm.id, &lm);

  constexpr int kMaxRows = 2 * kMaxVisibleLandmarks;
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, kMaxRows, 3> H(2 * z.readings.size(), 3);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxRows, 1> nu(2 * z.readings.size());
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxRows, 1> r_diag(2 * z.readings.size());

  const State& mu = b.mean;
  int rows = 0;
  for (const Reading& r : z.readings) {
    auto it = by_id.find(r.landmark_id);
    if (it == by_id.end()) continue;
    const Landmark& lm = *it->second;
    double dx = lm.x - mu.x;
    double dy = lm.y - mu.y;
    double d = std::hypot(dx, dy);
    if (d < 1e-9 || rows + 2 > kMaxRows) continue;

    double pred_range = d;
    double pred_bearing = wrap_angle(std::atan2(dy, dx) - mu.theta);
    nu(rows) = r.range - pred_range;
    nu(rows + 1) = wrap_angle(r.bearing - pred_bearing);

    H(rows, 0) = -dx / d;
    H(rows, 1) = -dy / d;
    H(rows, 2) = 0.0;
    H(rows + 1, 0) = dy / (d * d);
    H(rows + 1, 1) = -dx / (d * d);
    H(rows + 1, 2) = -1.0;

    double sr = m.range_std(d);
    double st = m.bearing_std(d);
    r_diag(rows) = sr * sr;
    r_diag(rows + 1) = st * st;
    rows += 2;
  }
  if (rows == 0) return b;

  auto Hv = H.topRows(rows);
  auto nuv = nu.head(rows);
  auto rv = r_diag.head(rows);

  using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRows, kMaxRows>;
  SMat S = Hv * b.cov * Hv.transpose();
  S.diagonal() += rv;

  Eigen::LDLT<SMat> ldlt(S);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    S.diagonal().array() += 1e-9;
    ldlt.compute(S);
    if (info != nullptr) info->regularized = true;
  }

  // K = P H^T S^{-1}, computed as (S^{-1} H P)^T since S and P are symmetric.
  Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, kMaxRows> K =
      ldlt.solve((Hv * b.cov).eval()).transpose();

  Eigen::Vector3d delta = K * nuv;
  GaussianBelief out;
  out.mean.x = mu.x + delta.x();
  out.mean.y = mu.y + delta.y();
  out.mean.theta = wrap_angle(mu.theta + delta.z());

  // Joseph form keeps the posterior covariance PSD.
  Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - K * Hv;
  out.cov = ikh * b.cov * ikh.transpose() + K * rv.asDiagonal() * K.transpose();
  symmetrize(out.cov);
  return out;
}

State sample_state(const GaussianBelief& b, Rng& rng) {
  Eigen::LLT<Eigen::Matrix3d> llt(b.cov + 1e-15 * Eigen::Matrix3d::Identity());
  Eigen::Matrix3d l = llt.matrixL();
  Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
  Eigen::Vector3d d = l * n;
  State s;
  s.x = b.mean.x + d.x();
  s.y = b.mean.y + d.y();
  s.theta = wrap_angle(b.mean.theta + d.z());
  return s;
}

}  // namespace bvl
