#include <cmath>

#include "bvl/models.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bvl;
using namespace bvl::test;

TEST_CASE("propagate: fixed point, paper step, additivity") {
  MotionModel mm;  // dt = 0.005
  State x{1.0, 2.0, 0.4};
  CHECK(propagate(x, Control{}, Eigen::Vector3d::Zero(), mm).x == x.x);

  State o{0, 0, 0};
  State s = propagate(o, Control{1, 0, 0}, Eigen::Vector3d::Zero(), mm);
  CHECK(s.x == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(s.y == 0.0);
  CHECK(s.theta == 0.0);

  Control u1{0.4, -0.2, 0.1}, u2{-0.1, 0.5, -0.3};
  State two = propagate(propagate(o, u1, Eigen::Vector3d::Zero(), mm), u2,
                        Eigen::Vector3d::Zero(), mm);
  Control sum{u1.vx + u2.vx, u1.vy + u2.vy, u1.vtheta + u2.vtheta};
  State one = propagate(o, sum, Eigen::Vector3d::Zero(), mm);
  CHECK(two.x == doctest::Approx(one.x).epsilon(1e-14));
  CHECK(two.y == doctest::Approx(one.y).epsilon(1e-14));
}

TEST_CASE("propagate: controls beyond v_max are clamped and flagged") {
  MotionModel mm;
  mm.v_max = 1.0;
  bool clamped = false;
  State s = propagate({0, 0, 0}, Control{5.0, -3.0, 0.2}, Eigen::Vector3d::Zero(), mm, &clamped);
  CHECK(clamped);
  CHECK(s.x == doctest::Approx(1.0 * mm.dt));
  CHECK(s.y == doctest::Approx(-1.0 * mm.dt));
}

TEST_CASE("propagate preserves the wrapped-angle invariant") {
  MotionModel mm;
  mm.v_max = 1000.0;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    State x{0, 0, rng.uniform(-10, 10)};
    State out = propagate(x, Control{0, 0, rng.uniform(-900, 900)},
                          Eigen::Vector3d(0, 0, rng.uniform(-10, 10)), mm);
    CHECK(out.theta > -kPi);
    CHECK(out.theta <= kPi);
  }
}

TEST_CASE("observe: range-bearing geometry") {
  ObservationModel om = zero_noise_observation();
  LandmarkSet lms = {{0, 1.0, 0.0}};
  Observation z = observe_noiseless({0, 0, 0}, lms, om);
  REQUIRE(z.readings.size() == 1);
  CHECK(z.readings[0].range == doctest::Approx(1.0));
  CHECK(z.readings[0].bearing == doctest::Approx(0.0));

  LandmarkSet up = {{0, 0.0, 1.0}};
  Observation z2 = observe_noiseless({0, 0, kPi / 2}, up, om);
  REQUIRE(z2.readings.size() == 1);
  CHECK(z2.readings[0].bearing == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("observe: noise std formula and sensing cutoff") {
  ObservationModel om;  // xi_r = 0.1, sigma_rb = 0.01
  CHECK(om.range_std(5.0) == doctest::Approx(0.51).epsilon(1e-12));

  om.sensing_range = 3.0;
  LandmarkSet lms = {{0, 2.0, 0.0}, {1, 5.0, 0.0}};
  Rng rng(1);
  Observation z = observe({0, 0, 0}, lms, om, rng);
  REQUIRE(z.readings.size() == 1);
  CHECK(z.readings[0].landmark_id == 0);

  // A landmark coincident with the robot produces no reading.
  LandmarkSet at = {{0, 0.0, 0.0}};
  CHECK(observe({0, 0, 0}, at, om, rng).readings.empty());
}

TEST_CASE("linearize: identity A, east-landmark gradient, finite differences") {
  MotionModel mm;
  ObservationModel om = zero_noise_observation(1e9);
  om.xi_r = 0.1;
  om.xi_theta = 0.05;
  om.sigma_rb = 0.01;
  om.sigma_tb = 0.01;

  LandmarkSet east = {{0, 3.0, 0.0}};
  Linearization lin = linearize({0, 0, 0}, Control{}, east, mm, om);
  CHECK(lin.A.isIdentity(0.0));
  CHECK(lin.H(0, 0) == doctest::Approx(-1.0));
  CHECK(lin.H(0, 1) == doctest::Approx(0.0));

  // Central finite differences of the measurement function.
  Environment env = open_environment();
  Rng rng(9);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    State x{rng.uniform(1, 9), rng.uniform(1, 9), rng.uniform(-kPi, kPi)};
    Linearization l = linearize(x, Control{}, env.landmarks, mm, om);
    int n = static_cast<int>(l.visible_ids.size());
    REQUIRE(n == static_cast<int>(env.landmarks.size()));
    for (int axis = 0; axis < 3; ++axis) {
      State xp = x, xm = x;
      (axis == 0 ? xp.x : axis == 1 ? xp.y : xp.theta) += h;
      (axis == 0 ? xm.x : axis == 1 ? xm.y : xm.theta) -= h;
      Observation zp = observe_noiseless(xp, env.landmarks, om);
      Observation zm = observe_noiseless(xm, env.landmarks, om);
      // Pair readings by landmark id; ordering can differ between the
      // perturbed states.
      auto find = [](const Observation& z, int id) -> const Reading& {
        for (const Reading& r : z.readings) {
          if (r.landmark_id == id) return r;
        }
        throw std::runtime_error("landmark missing");
      };
      for (int row = 0; row < n; ++row) {
        int id = l.visible_ids[row];
        const Reading& rp = find(zp, id);
        const Reading& rm = find(zm, id);
        double d_range = (rp.range - rm.range) / (2 * h);
        double d_bear = wrap_angle(rp.bearing - rm.bearing) / (2 * h);
        CHECK(std::abs(l.H(2 * row, axis) - d_range) < 1e-5);
        CHECK(std::abs(l.H(2 * row + 1, axis) - d_bear) < 1e-5);
      }
    }
  }
}

TEST_CASE("generative_step: determinism and the zero-noise degenerate case") {
  MotionModel mm = zero_noise_motion();
  ObservationModel om = zero_noise_observation();
  LandmarkSet lms = {{0, 2.0, 1.0}};
  Control u{1.0, 0.5, 0.1};

  Rng a(42), b(42);
  auto [xa, za] = generative_step({0, 0, 0}, u, lms, mm, om, a);
  auto [xb, zb] = generative_step({0, 0, 0}, u, lms, mm, om, b);
  CHECK(xa.x == xb.x);
  CHECK(xa.y == xb.y);
  CHECK(za.readings[0].range == zb.readings[0].range);

  State direct = propagate({0, 0, 0}, u, Eigen::Vector3d::Zero(), mm);
  Observation z_direct = observe_noiseless(direct, lms, om);
  CHECK(xa.x == direct.x);
  CHECK(xa.y == direct.y);
  CHECK(za.readings[0].range == z_direct.readings[0].range);
  CHECK(za.readings[0].bearing == z_direct.readings[0].bearing);
}

TEST_CASE("generative_step: empirical mean of x' agrees with the noiseless step") {
  MotionModel mm;
  mm.sigma_w = 0.5;
  mm.sigma_w_bias = 0.01;
  mm.v_max = 10.0;
  ObservationModel om;
  LandmarkSet lms;
  Control u{2.0, -1.0, 0.0};
  State x0{0, 0, 0};
  State noiseless = propagate(x0, u, Eigen::Vector3d::Zero(), mm);

  const int n = 100000;
  Rng rng(123);
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    auto [xp, z] = generative_step(x0, u, lms, mm, om, rng);
    sx += xp.x;
    sy += xp.y;
  }
  Eigen::Matrix3d q = motion_noise_cov(u, mm);
  double tol_x = 3.0 * std::sqrt(q(0, 0) / n);
  double tol_y = 3.0 * std::sqrt(q(1, 1) / n);
  CHECK(std::abs(sx / n - noiseless.x) < tol_x);
  CHECK(std::abs(sy / n - noiseless.y) < tol_y);
}

TEST_CASE("observation noise std is affine in distance with the configured slopes") {
  ObservationModel om;  // xi_r = 0.1, xi_theta = 0.05
  Rng rng(77);
  const int per_distance = 20000;
  std::vector<double> dist = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> std_r, std_t;
  for (double d : dist) {
    LandmarkSet lms = {{0, d, 0.0}};
    double sr = 0, srr = 0, st = 0, stt = 0;
    for (int i = 0; i < per_distance; ++i) {
      Observation z = observe({0, 0, 0}, lms, om, rng);
      double er = z.readings[0].range - d;
      double eb = z.readings[0].bearing;
      sr += er;
      srr += er * er;
      st += eb;
      stt += eb * eb;
    }
    std_r.push_back(std::sqrt(srr / per_distance - (sr / per_distance) * (sr / per_distance)));
    std_t.push_back(std::sqrt(stt / per_distance - (st / per_distance) * (st / per_distance)));
  }
  // Least-squares slope of std vs distance.
  auto slope = [&](const std::vector<double>& ys) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < dist.size(); ++i) {
      mx += dist[i];
      my += ys[i];
    }
    mx /= dist.size();
    my /= dist.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < dist.size(); ++i) {
      num += (dist[i] - mx) * (ys[i] - my);
      den += (dist[i] - mx) * (dist[i] - mx);
    }
    return num / den;
  };
  CHECK(std::abs(slope(std_r) - om.xi_r) / om.xi_r < 0.05);
  CHECK(std::abs(slope(std_t) - om.xi_theta) / om.xi_theta < 0.05);
}
