#include "bvl/controllers.hpp"

#include <cmath>

namespace bvl {

namespace {

double spectral_radius(const Eigen::Matrix3d& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

DareSolution solve_dare(const Eigen::Matrix3d& A, const Eigen::Matrix3d& B,
                        const Eigen::Matrix3d& Wx, const Eigen::Matrix3d& Wu) {
  constexpr int kMaxIter = 10000;
  constexpr double kTol = 1e-8;

  Eigen::Matrix3d S = Wx;
  double residual = std::numeric_limits<double>::infinity();
  auto riccati = [&](const Eigen::Matrix3d& s) -> Eigen::Matrix3d {
    Eigen::Matrix3d btsb = Wu + B.transpose() * s * B;
    Eigen::Matrix3d k = btsb.ldlt().solve(B.transpose() * s * A);
    Eigen::Matrix3d next = Wx + A.transpose() * s * (A - B * k);
    symmetrize(next);
    return next;
  };
  for (int i = 0; i < kMaxIter; ++i) {
    Eigen::Matrix3d next = riccati(S);
    residual = (next - S).norm();
    S = next;
    if (residual < kTol) break;
    if (!S.allFinite() || S.trace() > 1e16) {
      throw SynthesisError("solve_dare: Riccati iteration diverged");
    }
  }
  if (residual >= kTol) {
    throw SynthesisError("solve_dare: no convergence within 10^4 iterations");
  }

  DareSolution sol;
  sol.cost_matrix = S;
  sol.residual = (riccati(S) - S).norm();
  sol.gain = (Wu + B.transpose() * S * B).ldlt().solve(B.transpose() * S * A);
  sol.closed_loop_radius = spectral_radius(A - B * sol.gain);
  if (sol.closed_loop_radius >= 1.0) {
    throw SynthesisError("solve_dare: closed loop not strictly stable (radius " +
                         std::to_string(sol.closed_loop_radius) + ")");
  }
  return sol;
}

Eigen::Matrix3d stationary_filter_covariance(
    const Eigen::Matrix3d& A,
    const Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3>& H,
    const Eigen::Matrix3d& Qw,
    const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1>& R_diag) {
  constexpr int kMaxIter = 100000;
  constexpr double kTol = 1e-8;
  constexpr int kMaxRows = 2 * kMaxVisibleLandmarks;

  if (H.rows() == 0) {
    throw SynthesisError("stationary_filter_covariance: no measurements (unobservable)");
  }

  auto step = [&](const Eigen::Matrix3d& p) -> Eigen::Matrix3d {
    Eigen::Matrix3d pred = A * p * A.transpose() + Qw;
    using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRows, kMaxRows>;
    SMat S = H * pred * H.transpose();
    S.diagonal() += R_diag;
    Eigen::LDLT<SMat> ldlt(S);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
      S.diagonal().array() += 1e-15;
      ldlt.compute(S);
    }
    Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, kMaxRows> K =
        ldlt.solve((H * pred).eval()).transpose();
    Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - K * H;
    Eigen::Matrix3d next = ikh * pred * ikh.transpose();
    next += K * R_diag.asDiagonal() * K.transpose();
    symmetrize(next);
    return next;
  };

  // The recursion converges linearly and can crawl when the process noise is
  // tiny; extrapolate the geometric tail whenever the contraction ratio looks
  // stable, then keep iterating from the extrapolated point.
  Eigen::Matrix3d P = Qw;
  double residual = std::numeric_limits<double>::infinity();
  double prev_delta = -1.0;
  double prev_ratio = -1.0;
  int stalled = 0;
  for (int i = 0; i < kMaxIter; ++i) {
    Eigen::Matrix3d next = step(P);
    Eigen::Matrix3d d = next - P;
    residual = d.norm();
    P = next;
    if (residual < kTol) break;
    if (!P.allFinite() || P.trace() > 1e4) {
      throw SynthesisError("stationary_filter_covariance: recursion diverged");
    }
    if (prev_delta > 0.0) {
      double ratio = residual / prev_delta;
      // A ratio pinned at 1 means the covariance grows linearly along an
      // unobservable direction; there is no stationary point to find.
      if (std::abs(ratio - 1.0) < 1e-5) {
        if (++stalled > 300) {
          throw SynthesisError(
              "stationary_filter_covariance: covariance drifts (locally unobservable)");
        }
      } else {
        stalled = 0;
      }
      if (prev_ratio > 0.0 && ratio < 0.99999 && std::abs(ratio - prev_ratio) < 1e-2 * ratio) {
        P += d * (ratio / (1.0 - ratio));
        symmetrize(P);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(P);
        if (es.eigenvalues().minCoeff() < 0.0) {
          P = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
              es.eigenvectors().transpose();
          symmetrize(P);
        }
        prev_delta = -1.0;
        prev_ratio = -1.0;
        continue;
      }
      prev_ratio = ratio;
    }
    prev_delta = residual;
  }
  if (residual >= kTol) {
    throw SynthesisError("stationary_filter_covariance: no convergence");
  }
  return P;
}

DareSolution holonomic_gain(const MotionModel& mm, const LqgWeights& w) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d B = mm.dt * Eigen::Matrix3d::Identity();
  return solve_dare(A, B, w.Wx, w.Wu);
}

namespace {

Eigen::Vector3d pose_error(const GaussianBelief& b, const State& target) {
  return {b.mean.x - target.x, b.mean.y - target.y, wrap_angle(b.mean.theta - target.theta)};
}

}  // namespace

Control goto_law(const State& target, const GaussianBelief& b, const Eigen::Matrix3d& gain,
                 double v_max) {
  Eigen::Vector3d u = -gain * pose_error(b, target);
  return clamp_control({u.x(), u.y(), u.z()}, v_max);
}

Control apply_stabilizer(const StationaryLqg& c, const GaussianBelief& b, double v_max) {
  return goto_law(c.target, b, c.gain, v_max);
}

StationaryLqg make_node_controller(const State& v, const Environment& env, const MotionModel& mm,
                                   const ObservationModel& om, const LqgWeights& w) {
  if (collides_point(v, env)) {
    throw SynthesisError("make_node_controller: target state collides");
  }
  DareSolution dare = holonomic_gain(mm, w);
  Linearization lin = linearize(v, Control{}, env.landmarks, mm, om);
  StationaryLqg c;
  c.target = v;
  c.gain = dare.gain;
  c.stationary_cov = stationary_filter_covariance(lin.A, lin.H, lin.Qw, lin.R_diag);
  return c;
}

State EdgeController::nominal_state(int k) const {
  if (k >= nominal_steps()) return to;
  State s = from;
  int done = 0;
  for (const Segment& seg : segments) {
    int take = std::min(seg.steps, k - done);
    if (take > 0) {
      s.x += seg.u.vx * dt * take;
      s.y += seg.u.vy * dt * take;
      s.theta = wrap_angle(s.theta + seg.u.vtheta * dt * take);
    }
    done += seg.steps;
    if (k <= done) break;
  }
  return s;
}

Control EdgeController::nominal_control(int k) const {
  int done = 0;
  for (const Segment& seg : segments) {
    if (k < done + seg.steps) return seg.u;
    done += seg.steps;
  }
  return Control{};
}

EdgeController make_edge_controller(const State& vi, const State& vj, const Environment& env,
                                    const MotionModel& mm, const LqgWeights& w) {
  if (collides_segment(vi, vj, env)) {
    throw EdgeRejectedError("make_edge_controller: straight segment vi->vj collides");
  }
  EdgeController c;
  c.from = vi;
  c.to = vj;
  c.dt = mm.dt;
  c.gain = holonomic_gain(mm, w).gain;

  double dist = planar_distance(vi, vj);
  double dir = dist > 1e-12 ? std::atan2(vj.y - vi.y, vj.x - vi.x) : vi.theta;
  double step_angle = mm.v_max * mm.dt;

  // Rotate in place toward the motion direction.
  double dth = wrap_angle(dir - vi.theta);
  if (std::abs(dth) > 1e-12) {
    int rot_steps = static_cast<int>(std::ceil(std::abs(dth) / step_angle));
    c.segments.push_back({Control{0.0, 0.0, dth / (rot_steps * mm.dt)}, rot_steps});
  }

  // Translate at full speed along the segment, then align with the target
  // heading.
  if (dist > 1e-12) {
    int steps = static_cast<int>(std::ceil(dist / mm.step_length()));
    Control u;
    u.vx = (vj.x - vi.x) / (steps * mm.dt);
    u.vy = (vj.y - vi.y) / (steps * mm.dt);
    c.segments.push_back({u, steps});

    double dth2 = wrap_angle(vj.theta - dir);
    if (std::abs(dth2) > 1e-12) {
      int rot2 = static_cast<int>(std::ceil(std::abs(dth2) / step_angle));
      c.segments.push_back({Control{0.0, 0.0, dth2 / (rot2 * mm.dt)}, rot2});
    }
  }
  return c;
}

Control apply_edge_controller(const EdgeController& c, const GaussianBelief& b, int k,
                              double v_max) {
  if (k >= c.nominal_steps()) {
    return goto_law(c.to, b, c.gain, v_max);
  }
  State xn = c.nominal_state(k);
  Control un = c.nominal_control(k);
  Eigen::Vector3d fb = -c.gain * pose_error(b, xn);
  return clamp_control({un.vx + fb.x(), un.vy + fb.y(), un.vtheta + fb.z()}, v_max);
}

}  // namespace bvl
