#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "bridgelab/model_map.hpp"

using namespace bridgelab;

namespace {

BridgeProfile make_profile(int n, Branch branch, double t) {
  return profile_from_t(n, branch, t);
}

}  // namespace

TEST(ModelBall, AlphaFromAmplitude) {
  const auto p = make_profile(3, Branch::spherical(), 0.8);
  const auto ball = model_ball_from_profile(p);
  EXPECT_NEAR(ball.alpha, std::pow(p.C, 4.0 / (p.n - 2.0)) / 4.0, 1e-14);
  EXPECT_NEAR(ball.kappa * ball.alpha, 1.0, 1e-12);
}

TEST(ModelBall, RadiusIndependentOfBoundaryPoint) {
  // model_ball_from_profile already cross-checks x' = 0 against x' = e2;
  // repeat the check directly with a third boundary point.
  for (double t : {-2.0, 0.0, 1.5}) {
    const auto p = make_profile(3, Branch::spherical(), t);
    const auto ball = model_ball_from_profile(p);
    const double s_star = axis_conformal_midpoint(p);
    Eigen::VectorXd yc = Eigen::VectorXd::Zero(3), yb = Eigen::VectorXd::Zero(3);
    yc[0] = s_star;
    yb[0] = -p.t;
    yb[1] = -1.7;
    yb[2] = 0.4;
    const double r3 = geodesic_distance(p.branch, ball.alpha, stereo_inverse(p.branch, yc),
                                        stereo_inverse(p.branch, yb));
    EXPECT_NEAR(r3 / ball.radius, 1.0, 1e-8);
  }
}

TEST(ModelBall, RobinCoefficientIdentity) {
  // beta = s'_kappa(R)/s_kappa(R) ties the multiplier convention to the
  // numerically computed radius; closed-form check: cot(sqrt(kappa) R) = -t.
  for (double t : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const auto p = make_profile(3, Branch::spherical(), t);
    const auto ball = model_ball_from_profile(p);
    EXPECT_LT(std::abs(ball.robin_residual()), 1e-8 * std::max(1.0, std::abs(ball.beta)));
    EXPECT_NEAR(std::sqrt(ball.kappa) * ball.radius, M_PI / 2.0 + std::atan(t), 1e-10);
  }
  for (double t : {-4.0, -1.5}) {
    const auto p = make_profile(4, Branch::hyperbolic(), t);
    const auto ball = model_ball_from_profile(p);
    EXPECT_LT(std::abs(ball.robin_residual()), 1e-8 * std::max(1.0, std::abs(ball.beta)));
    const double tau = -t;
    EXPECT_NEAR(std::sqrt(-ball.kappa) * ball.radius,
                std::acosh(tau / std::sqrt(tau * tau - 1.0)), 1e-10);
  }
}

TEST(ModelBall, SphericalRadiusInsideInjectivityBound) {
  for (double t : {-20.0, -1.0, 0.0, 1.0, 20.0}) {
    const auto p = make_profile(3, Branch::spherical(), t);
    const auto ball = model_ball_from_profile(p);
    EXPECT_LT(ball.radius, M_PI / std::sqrt(ball.kappa));
  }
}

TEST(ConformalCenter, MatchesClosedForm) {
  // The incenter preimage is y* = 1/(sqrt(1+t^2)+t) on the spherical branch
  // and tau + sqrt(tau^2-1) on the hyperbolic one.
  for (double t : {-1.5, 0.0, 2.0}) {
    const auto p = make_profile(3, Branch::spherical(), t);
    const double expected = 1.0 / (std::sqrt(1.0 + t * t) + t);
    EXPECT_NEAR(axis_conformal_midpoint(p), expected, 1e-9 * std::max(1.0, expected));
  }
  for (double t : {-3.0, -1.2}) {
    const auto p = make_profile(3, Branch::hyperbolic(), t);
    const double tau = -t;
    const double expected = tau + std::sqrt(tau * tau - 1.0);
    EXPECT_NEAR(axis_conformal_midpoint(p), expected, 1e-9 * expected);
  }
}

TEST(ModelBall, VolumeAndAreaMatchConstraints) {
  // The isometry carries the unit bulk mass and the trace mass: so
  // |S^{n-1}| int_0^R s^{n-1} = 1 and |S^{n-1}| s(R)^{n-1} = T^{2#}.
  for (double t : {-1.0, 0.5}) {
    const auto p = make_profile(3, Branch::spherical(), t);
    const auto ball = model_ball_from_profile(p);
    QuadratureSpec spec;
    const double area = 2.0 * std::pow(M_PI, 1.5) / std::tgamma(1.5);
    const double vol = area * integrate([&](double r) {
      return std::pow(s_kappa(ball.kappa, r), p.n - 1);
    }, 0.0, ball.radius, spec);
    EXPECT_NEAR(vol, 1.0, 1e-9);
    const double bdry = area * std::pow(s_kappa(ball.kappa, ball.radius), p.n - 1);
    EXPECT_NEAR(bdry, std::pow(p.T, p.exponents().two_sharp), 1e-8 * bdry);
  }
}

TEST(ModelMap, ChartRoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double t : {-2.5, 0.9}) {
    const ModelMap map(make_profile(3, Branch::spherical(), t));
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd y(3);
      y[0] = -t + 0.05 + 2.5 * std::abs(u(rng));  // inside the half-space chart
      y[1] = u(rng);
      y[2] = u(rng);
      const auto mp = map.to_model(y);
      EXPECT_LE(mp.r, map.ball().radius * (1.0 + 1e-9));
      EXPECT_NEAR(mp.omega.norm(), 1.0, 1e-10);
      const Eigen::VectorXd back = map.from_model(mp.r, mp.omega);
      EXPECT_LT((back - y).norm(), 1e-8 * std::max(1.0, y.norm()));
    }
  }
  const ModelMap maph(make_profile(4, Branch::hyperbolic(), -1.8));
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd y(4);
    y[0] = 1.8 + 0.05 + 2.0 * std::abs(u(rng));
    y[1] = u(rng);
    y[2] = u(rng);
    y[3] = u(rng);
    const auto mp = maph.to_model(y);
    const Eigen::VectorXd back = maph.from_model(mp.r, mp.omega);
    EXPECT_LT((back - y).norm(), 1e-8 * std::max(1.0, y.norm()));
  }
}

TEST(ModelMap, BoundaryMapsToSphereRadius) {
  const ModelMap map(make_profile(3, Branch::spherical(), -0.7));
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 40; ++k) {
    Eigen::VectorXd y(3);
    y[0] = -map.profile().t;  // x_1 = 0
    y[1] = u(rng);
    y[2] = u(rng);
    const auto mp = map.to_model(y);
    EXPECT_NEAR(mp.r / map.ball().radius, 1.0, 1e-9);
  }
}
