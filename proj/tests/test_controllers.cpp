#include <cmath>

#include "bvl/controllers.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bvl;
using namespace bvl::test;

TEST_CASE("solve_dare: scalar-decoupled golden-ratio fixed point") {
  Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  DareSolution sol = solve_dare(I, I, I, I);
  double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK((sol.cost_matrix - phi * I).norm() < 1e-7);
  // Gain (sqrt(5)-1)/2 per axis, closed-loop pole (3-sqrt(5))/2.
  CHECK(sol.gain(0, 0) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-7));
  CHECK(sol.closed_loop_radius == doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-7));
  CHECK(sol.residual < 1e-8);
  CHECK(sol.closed_loop_radius < 1.0);
}

TEST_CASE("solve_dare: B = 0 with stable A reduces to the Lyapunov series") {
  Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  DareSolution sol = solve_dare(0.5 * I, Eigen::Matrix3d::Zero(), I, I);
  CHECK((sol.cost_matrix - (1.0 / 0.75) * I).norm() < 1e-7);
}

TEST_CASE("solve_dare: returned S is a fixed point of one more Riccati step") {
  MotionModel mm;
  LqgWeights w;
  DareSolution sol = holonomic_gain(mm, w);
  const Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d B = mm.dt * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d& S = sol.cost_matrix;
  Eigen::Matrix3d K = (w.Wu + B.transpose() * S * B).ldlt().solve(B.transpose() * S * A);
  Eigen::Matrix3d next = w.Wx + A.transpose() * S * (A - B * K);
  CHECK((next - S).norm() < 1e-8);
  CHECK(sol.residual < 1e-8);
}

TEST_CASE("stationary_filter_covariance: zero process noise drives P to zero") {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3> H(3, 3);
  H.setIdentity();
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1> R(3);
  R.setConstant(0.01);
  Eigen::Matrix3d P = stationary_filter_covariance(A, H, Eigen::Matrix3d::Zero(), R);
  CHECK(P.trace() < 1e-9);
}

TEST_CASE("stationary_filter_covariance: scalar fixed point p = r(p+q)/(p+q+r)") {
  double q = 0.02, r = 0.05;
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3> H(1, 3);
  H.setZero();
  H(0, 0) = 1.0;
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1> R(1);
  R(0) = r;
  Eigen::Matrix3d Qw = Eigen::Matrix3d::Zero();
  Qw(0, 0) = q;
  Eigen::Matrix3d P = stationary_filter_covariance(A, H, Qw, R);
  // Positive root of p^2 + pq - rq = 0.
  double expect = (-q + std::sqrt(q * q + 4 * r * q)) / 2.0;
  CHECK(P(0, 0) == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("stationary_filter_covariance: unobservable node is rejected") {
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 2 * kMaxVisibleLandmarks, 3> H(0, 3);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxVisibleLandmarks, 1> R(0);
  CHECK_THROWS_AS(stationary_filter_covariance(Eigen::Matrix3d::Identity(), H,
                                               0.001 * Eigen::Matrix3d::Identity(), R),
                  SynthesisError);
}

TEST_CASE("a simulated filter at the node converges to P_c") {
  Environment env = open_environment(6.0);
  MotionModel mm;
  mm.sigma_w_bias = 0.02;
  ObservationModel om;
  LqgWeights w;
  State v{3.0, 3.0, 0.3};
  StationaryLqg ctrl = make_node_controller(v, env, mm, om, w);

  // Covariance recursion under zero innovations; the mean parks at v.
  GaussianBelief b;
  b.mean = v;
  b.cov = 0.01 * Eigen::Matrix3d::Identity();
  ObservationModel om_clean = om;
  for (int k = 0; k < 500; ++k) {
    b = ekf_predict(b, Control{}, mm);
    Observation z = observe_noiseless(b.mean, env.landmarks, om_clean);
    b = ekf_update(b, z, om_clean, env.landmarks);
  }
  CHECK((b.cov - ctrl.stationary_cov).norm() < 1e-6);
}

TEST_CASE("node controller: equilibrium, contraction, saturation") {
  Environment env = open_environment();
  MotionModel mm = zero_noise_motion(0.005, 10.0);
  ObservationModel om = zero_noise_observation();
  LqgWeights w;
  State v{5.0, 5.0, 0.0};
  StationaryLqg ctrl = make_node_controller(v, env, mm, om, w);
  DareSolution dare = holonomic_gain(mm, w);
  CHECK(dare.closed_loop_radius < 1.0);

  // At the equilibrium the law commands zero.
  GaussianBelief at;
  at.mean = v;
  at.cov = ctrl.stationary_cov;
  Control u0 = apply_stabilizer(ctrl, at, mm.v_max);
  CHECK(u0.vx == 0.0);
  CHECK(u0.vy == 0.0);
  CHECK(u0.vtheta == 0.0);

  // Saturation: a huge error clamps to v_max per axis.
  GaussianBelief far = at;
  far.mean.x = v.x - 1e6;
  CHECK(apply_stabilizer(ctrl, far, mm.v_max).vx == mm.v_max);

  // Noiseless closed loop: offset decays geometrically once unsaturated, and
  // reaches 1% of the offset within the rate bound plus the saturated phase.
  double rho = dare.closed_loop_radius;
  GaussianBelief b = at;
  b.mean.x = v.x + 0.5;
  double err = 0.5;
  int reach = -1;
  int saturated_steps = static_cast<int>(std::ceil(0.5 / (mm.v_max * mm.dt)));
  int bound =
      saturated_steps + static_cast<int>(std::ceil(std::log(0.005 / 0.5) / std::log(rho))) + 5;
  for (int k = 0; k < 2000; ++k) {
    Control u = apply_stabilizer(ctrl, b, mm.v_max);
    bool saturated = std::abs(u.vx) >= mm.v_max;
    b.mean = propagate(b.mean, u, Eigen::Vector3d::Zero(), mm);
    double next_err = std::abs(b.mean.x - v.x);
    if (!saturated) CHECK(next_err <= (rho + 1e-6) * err + 1e-12);
    err = next_err;
    if (err <= 0.005 && reach < 0) reach = k;
  }
  CHECK(reach >= 0);
  CHECK(reach <= bound);
}

TEST_CASE("edge controller: degenerate edge, step count, nominal tracking") {
  Environment env = open_environment();
  MotionModel mm = zero_noise_motion(0.005, 10.0);
  LqgWeights w;

  State vi{2.0, 2.0, 0.0};
  SUBCASE("vi == vj reduces to the stabilizer") {
    EdgeController c = make_edge_controller(vi, vi, env, mm, w);
    CHECK(c.nominal_steps() == 0);
    GaussianBelief b;
    b.mean = {2.5, 2.0, 0.0};
    Control u = apply_edge_controller(c, b, 0, mm.v_max);
    Control u_stab = goto_law(vi, b, c.gain, mm.v_max);
    CHECK(u.vx == u_stab.vx);
    CHECK(u.vy == u_stab.vy);
  }

  SUBCASE("translation step count is ceil(dist / (v_max dt))") {
    State vj{4.5, 2.0, 0.0};  // aligned heading: no rotation segments
    EdgeController c = make_edge_controller(vi, vj, env, mm, w);
    int expect = static_cast<int>(std::ceil(2.5 / (mm.v_max * mm.dt)));
    CHECK(c.nominal_steps() == expect);
  }

  SUBCASE("zero-noise execution tracks the nominal to 1e-6") {
    State vj{6.0, 5.0, 0.0};
    EdgeController c = make_edge_controller(vi, vj, env, mm, w);
    GaussianBelief b;
    b.mean = vi;
    b.cov = Eigen::Matrix3d::Zero();
    double worst = 0.0;
    for (int k = 0; k < c.nominal_steps(); ++k) {
      State nom = c.nominal_state(k);
      worst = std::max({worst, std::abs(b.mean.x - nom.x), std::abs(b.mean.y - nom.y)});
      Control u = apply_edge_controller(c, b, k, mm.v_max);
      b.mean = propagate(b.mean, u, Eigen::Vector3d::Zero(), mm);
    }
    CHECK(worst < 1e-6);
    CHECK(std::abs(b.mean.x - vj.x) < 1e-6);
    CHECK(std::abs(b.mean.y - vj.y) < 1e-6);
  }

  SUBCASE("colliding nominal is rejected") {
    Environment walled = generate_rnp({RnpFamily::ObsWall, 20.0, 10.0, 1});
    CHECK_THROWS_AS(
        make_edge_controller({8, 10, 0}, {12, 10, 0}, walled, mm, w), EdgeRejectedError);
  }
}

TEST_CASE("apply_edge_controller: on-nominal control is the nominal control") {
  Environment env = open_environment();
  MotionModel mm;
  mm.v_max = 10.0;
  LqgWeights w;
  State vi{2, 2, 0}, vj{5, 2, 0};
  EdgeController c = make_edge_controller(vi, vj, env, mm, w);
  int k = c.nominal_steps() / 2;
  GaussianBelief b;
  b.mean = c.nominal_state(k);
  b.cov = Eigen::Matrix3d::Zero();
  Control u = apply_edge_controller(c, b, k, mm.v_max);
  Control un = c.nominal_control(k);
  CHECK(u.vx == un.vx);
  CHECK(u.vy == un.vy);
  CHECK(u.vtheta == un.vtheta);

  // Saturation contract.
  b.mean.y += 100.0;
  CHECK(apply_edge_controller(c, b, k, mm.v_max).vy == -mm.v_max);

  // One-step deviation shrinks in the noiseless linear regime.
  GaussianBelief off;
  off.mean = c.nominal_state(k);
  off.mean.y += 0.001;
  off.cov = Eigen::Matrix3d::Zero();
  Control uc = apply_edge_controller(c, off, k, mm.v_max);
  State next = propagate(off.mean, uc, Eigen::Vector3d::Zero(), mm);
  State nom_next = c.nominal_state(k + 1);
  double dev0 = 0.001;
  double dev1 = std::abs(next.y - nom_next.y);
  DareSolution dare = holonomic_gain(mm, w);
  CHECK(dev1 <= (dare.closed_loop_radius + 1e-6) * dev0);
}
