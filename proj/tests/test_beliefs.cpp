#include <cmath>

#include "bvl/beliefs.hpp"
#include "bvl/firm.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bvl;
using namespace bvl::test;

TEST_CASE("ekf_predict: zero control and zero noise leave the belief unchanged") {
  MotionModel mm = zero_noise_motion();
  GaussianBelief b = make_belief(1.0, 2.0, 0.3);
  GaussianBelief out = ekf_predict(b, Control{}, mm);
  CHECK(out.mean.x == b.mean.x);
  CHECK(out.mean.y == b.mean.y);
  CHECK(out.mean.theta == b.mean.theta);
  CHECK((out.cov - b.cov).norm() == 0.0);
}

TEST_CASE("ekf_predict: holonomic Jacobian is identity, so traces add") {
  MotionModel mm;  // defaults
  GaussianBelief b = make_belief(0.0, 0.0, 0.0, 0.04, 0.01);
  Control u{1.0, 0.0, 0.0};
  GaussianBelief out = ekf_predict(b, u, mm);

  // Independent hand evaluation of the noise covariance trace.
  auto sq = [](double v) { return v * v; };
  double tr_q = sq(mm.sigma_w * 1.0 * mm.dt + mm.sigma_w_bias) +
                sq(mm.sigma_w * 0.0 * mm.dt + mm.sigma_w_bias) +
                sq(mm.sigma_w * 0.0 * mm.dt + mm.sigma_w_bias);
  CHECK(out.cov.trace() - b.cov.trace() == doctest::Approx(tr_q).epsilon(1e-12));
}

TEST_CASE("ekf_predict: rejects non-finite input") {
  MotionModel mm;
  GaussianBelief b = make_belief(0, 0, 0);
  b.mean.x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ekf_predict(b, Control{}, mm), std::invalid_argument);
}

TEST_CASE("ekf_update: empty observation leaves the belief unchanged") {
  GaussianBelief b = make_belief(1, 1, 0);
  ObservationModel om;
  LandmarkSet lms = {{0, 3.0, 1.0}};
  GaussianBelief out = ekf_update(b, Observation{}, om, lms);
  CHECK((out.cov - b.cov).norm() == 0.0);
  CHECK(out.mean.x == b.mean.x);
}

TEST_CASE("ekf_update: infinite measurement noise reduces to the prior") {
  GaussianBelief b = make_belief(2, 2, 0.1);
  ObservationModel om;
  om.xi_r *= 1e6;
  om.xi_theta *= 1e6;
  om.sigma_rb *= 1e6;
  om.sigma_tb *= 1e6;
  LandmarkSet lms = {{0, 4.0, 2.0}};
  Observation z = observe_noiseless(b.mean, lms, om);
  GaussianBelief out = ekf_update(b, z, om, lms);
  CHECK((out.cov - b.cov).norm() < 1e-6);
  CHECK(std::abs(out.mean.x - b.mean.x) < 1e-6);
  CHECK(std::abs(out.mean.y - b.mean.y) < 1e-6);
}

TEST_CASE("ekf_update: one-landmark update matches the conjugate-Gaussian product") {
  // Robot on the x axis, landmark due east: the range measurement is exactly
  // linear in x and the EKF must coincide with the scalar Bayes update.
  double mu0 = 2.0, s0 = 0.3, lm_x = 8.0;
  GaussianBelief b;
  b.mean = {mu0, 0.0, 0.0};
  b.cov = Eigen::Vector3d(s0 * s0, 0.0, 0.0).asDiagonal();

  ObservationModel om;
  LandmarkSet lms = {{0, lm_x, 0.0}};

  double measured_range = lm_x - 2.35;  // synthetic reading
  Observation z;
  z.readings.push_back({0, measured_range, 0.0});

  GaussianBelief out = ekf_update(b, z, om, lms);

  // Closed-form posterior with the same measurement std the filter uses.
  double r = om.range_std(lm_x - mu0);
  double post_var = 1.0 / (1.0 / (s0 * s0) + 1.0 / (r * r));
  double post_mean = post_var * (mu0 / (s0 * s0) + (lm_x - measured_range) / (r * r));
  CHECK(out.mean.x == doctest::Approx(post_mean).epsilon(1e-9));
  CHECK(out.cov(0, 0) == doctest::Approx(post_var).epsilon(1e-9));
}

TEST_CASE("ekf matches a closed-form scalar Kalman filter over 100 steps") {
  MotionModel mm;
  mm.dt = 0.01;
  mm.sigma_w = 0.5;
  mm.sigma_w_bias = 0.0;  // keeps y/theta noise-free so the problem stays 1D
  mm.v_max = 10.0;
  ObservationModel om;
  om.sensing_range = 1e6;
  double lm_x = 50.0;
  LandmarkSet lms = {{0, lm_x, 0.0}};
  Control u{1.0, 0.0, 0.0};

  GaussianBelief b;
  b.mean = {0.0, 0.0, 0.0};
  b.cov = Eigen::Vector3d(0.25, 0.0, 0.0).asDiagonal();

  double mu = 0.0, var = 0.25;
  double q = std::pow(mm.sigma_w * 1.0 * mm.dt, 2);

  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    // Prediction.
    b = ekf_predict(b, u, mm);
    mu += u.vx * mm.dt;
    var += q;
    // Synthetic range measurement, fed to both filters.
    double m = (lm_x - mu) + 0.01 * rng.normal();
    Observation z;
    z.readings.push_back({0, m, 0.0});
    double r = om.range_std(lm_x - b.mean.x);
    b = ekf_update(b, z, om, lms);
    double k_gain = var / (var + r * r);
    mu = mu + k_gain * ((lm_x - m) - mu);
    var = (1.0 - k_gain) * var;

    CHECK(std::abs(b.mean.x - mu) < 1e-9);
    CHECK(std::abs(b.cov(0, 0) - var) < 1e-9);
  }
}

TEST_CASE("filter steps keep the covariance symmetric and PSD") {
  MotionModel mm;
  ObservationModel om;
  Environment env = open_environment();
  Rng rng(3);
  GaussianBelief b = make_belief(5, 5, 0.2, 0.05, 0.01);
  State x = b.mean;
  for (int k = 0; k < 300; ++k) {
    Control u{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1, 1)};
    GaussianBelief pred = ekf_predict(b, u, mm);
    auto [xp, z] = generative_step(x, u, env.landmarks, mm, om, rng);
    x = xp;
    b = ekf_update(pred, z, om, env.landmarks);

    CHECK((b.cov - b.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(b.cov, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    // The update never increases the covariance in the PSD order.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> diff(pred.cov - b.cov,
                                                        Eigen::EigenvaluesOnly);
    CHECK(diff.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("step_cost: paper weights give 1.005 at tr(P) = 0.1") {
  CostWeights w;  // xi_p = 10, xi_T = 1, dt = 0.005
  GaussianBelief b;
  b.cov = Eigen::Vector3d(0.05, 0.03, 0.02).asDiagonal();
  CHECK(step_cost(b, w) == doctest::Approx(1.005).epsilon(1e-12));

  GaussianBelief zero;
  CHECK(step_cost(zero, w) == doctest::Approx(0.005).epsilon(1e-12));

  GaussianBelief twice = b;
  twice.cov *= 2.0;
  CHECK(step_cost(twice, w) - w.xi_T * w.dt ==
        doctest::Approx(2.0 * (step_cost(b, w) - w.xi_T * w.dt)).epsilon(1e-12));
}

TEST_CASE("step_cost is affine in the trace with slope xi_p") {
  CostWeights w;
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    GaussianBelief b = random_belief(rng);
    CHECK(step_cost(b, w) ==
          doctest::Approx(w.xi_p * b.cov.trace() + w.xi_T * w.dt).epsilon(1e-12));
  }
}

TEST_CASE("belief_distance: identity, 3-4-5 example, and metric axioms") {
  BeliefMetric m;  // wx = wy = 1, w_theta = 0.5, xi_sigma = 1

  GaussianBelief a = make_belief(1, 2, 0.5);
  CHECK(belief_distance(a, a, m) == 0.0);

  GaussianBelief b1 = make_belief(0, 0, 0, 0.02, 0.01);
  GaussianBelief b2 = make_belief(3, 4, 0, 0.02, 0.01);
  CHECK(belief_distance(b1, b2, m) == doctest::Approx(5.0).epsilon(1e-12));

  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    GaussianBelief x = random_belief(rng);
    GaussianBelief y = random_belief(rng);
    GaussianBelief z = random_belief(rng);
    double dxy = belief_distance(x, y, m);
    double dyx = belief_distance(y, x, m);
    double dxz = belief_distance(x, z, m);
    double dzy = belief_distance(z, y, m);
    CHECK(dxy >= 0.0);
    CHECK(dxy == doctest::Approx(dyx).epsilon(1e-12));
    CHECK(dxy <= dxz + dzy + 1e-12);
  }
}

TEST_CASE("is_in_node: closed ball semantics") {
  BeliefMetric m;
  FirmNode node;
  node.center = make_belief(1, 1, 0);
  GaussianBelief b = node.center;
  node.epsilon = 0.25;
  CHECK(is_in_node(b, node, m));

  GaussianBelief off = node.center;
  off.mean.x += 0.1;
  double d = belief_distance(off, node.center, m);
  node.epsilon = d;  // boundary is inside
  CHECK(is_in_node(off, node, m));
  node.epsilon = d - 1e-9;
  CHECK_FALSE(is_in_node(off, node, m));
}
