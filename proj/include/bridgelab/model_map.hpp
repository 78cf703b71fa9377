#pragma once

// Extraction of the model ball from a bridge profile, and the chart between
// half-space points and geodesic polar coordinates on the ball.
//
// The rotation O_t / Lorentz map L_t are never materialized: the ball center
// is found as the conformal midpoint of the symmetry axis (the point of the
// axis splitting its g_U-length in half, i.e. the incenter), and the radius
// is a geodesic distance between chart images.  Polar coordinates come from
// rotation-invariant ambient pairings against the axis frame.

#include <cmath>

#include <Eigen/Core>

#include "bridgelab/errors.hpp"
#include "bridgelab/geometry.hpp"
#include "bridgelab/profile.hpp"
#include "bridgelab/quadrature.hpp"

namespace bridgelab {

// g_U-length element along the axis, in the y = x - t e1 chart.
inline double axis_conformal_weight(const BridgeProfile& p, double y) {
  return std::pow(p.C, 2.0 / (p.n - 2.0)) / (p.branch.eta() + y * y);
}

// The axis point whose g_U-distance to the boundary equals its distance to
// the far end; 1D bisection on the arclength split.
inline double axis_conformal_midpoint(const BridgeProfile& p, const QuadratureSpec& quad = {}) {
  auto w = [&](double u) { return axis_conformal_weight(p, u); };
  const double a = -p.t;
  const double total = integrate_half_line_split(w, a, {-2.0, 2.0}, quad);

  // Bracket the midpoint by doubling, then bisect on L(s) - total/2.
  auto L = [&](double s) { return integrate_split(w, a, s, {-2.0, 2.0}, quad); };
  double step = 1.0, hi = a + step;
  while (L(hi) < 0.5 * total) {
    step *= 2.0;
    hi = a + step;
    if (step > 1e12) throw RootError("axis_conformal_midpoint: bracket expansion failed");
  }
  double lo = std::max(a, hi - step);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (L(mid) < 0.5 * total ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline ModelBall model_ball_from_profile(const BridgeProfile& p,
                                         const QuadratureSpec& quad = {}) {
  const auto ex = p.exponents();
  ModelBall ball;
  ball.n = p.n;
  ball.branch = p.branch;
  ball.alpha = std::pow(p.C, 4.0 / (p.n - 2.0)) / 4.0;
  ball.kappa = p.branch.eta() / ball.alpha;
  ball.beta = (ex.two_sharp - 2.0) * p.sigma;

  const double s_star = axis_conformal_midpoint(p, quad);
  Eigen::VectorXd y_center = Eigen::VectorXd::Zero(p.n);
  y_center[0] = s_star;
  const ModelPoint center = stereo_inverse(p.branch, y_center);

  // Two distinct boundary points of the half-space: x' = 0 and x' = e2.
  Eigen::VectorXd yb1 = Eigen::VectorXd::Zero(p.n);
  yb1[0] = -p.t;
  Eigen::VectorXd yb2 = yb1;
  yb2[1] = 1.0;
  const double r1 = geodesic_distance(p.branch, ball.alpha, center, stereo_inverse(p.branch, yb1));
  const double r2 = geodesic_distance(p.branch, ball.alpha, center, stereo_inverse(p.branch, yb2));
  if (std::abs(r1 - r2) > 1e-8 * r1)
    throw IsometryError("model_ball_from_profile: boundary points map to different radii");
  ball.radius = r1;

  if (std::abs(ball.robin_residual()) > 1e-8 * std::max(1.0, std::abs(ball.beta)))
    throw IsometryError("model_ball_from_profile: beta != s'_kappa(R)/s_kappa(R)");
  ball.validate();
  return ball;
}

// ============================================================================
// Chart between the half-space and geodesic polar coordinates on the ball
// ============================================================================

// Polar coordinates (r, omega) of a point on the ball: r is the geodesic
// distance from the center in the scaled metric, omega in S^{n-1} collects
// the direction cosines; omega[0] is the component along the zonal pole
// (the axis direction pointing away from the half-space boundary).
struct ModelPolar {
  double r = 0.0;
  Eigen::VectorXd omega;
};

class ModelMap {
public:
  ModelMap(BridgeProfile profile, const QuadratureSpec& quad = {})
      : profile_(std::move(profile)),
        ball_(model_ball_from_profile(profile_, quad)),
        frame_(std::sqrt(std::abs(profile_.branch.eta() + profile_.t * profile_.t))) {}

  const BridgeProfile& profile() const { return profile_; }
  const ModelBall& ball() const { return ball_; }

  // y = x - t e1 chart -> polar coordinates on the ball.
  ModelPolar to_model(const Eigen::VectorXd& y) const {
    const int n = profile_.n;
    const double t = profile_.t;
    const double y2 = y.squaredNorm();
    ModelPolar out;
    out.omega = Eigen::VectorXd::Zero(n);
    if (profile_.branch.tag == BranchTag::Spherical) {
      const double den = 1.0 + y2;
      const double xi1 = 2.0 * y[0] / den;
      const double xil = (y2 - 1.0) / den;
      const double cos_ru = std::clamp((xi1 - t * xil) / frame_, -1.0, 1.0);
      const double sin_ru = std::sqrt(std::max(0.0, 1.0 - cos_ru * cos_ru));
      out.r = std::sqrt(ball_.alpha) * std::acos(cos_ru);
      if (sin_ru < 1e-300) {
        out.omega[0] = 1.0;
        return out;
      }
      out.omega[0] = (t * xi1 + xil) / frame_ / sin_ru;
      for (int i = 1; i < n; ++i) out.omega[i] = 2.0 * y[i] / den / sin_ru;
    } else {
      const double den = y2 - 1.0;
      if (den <= 0.0) throw DomainError("ModelMap::to_model: point inside the singular sphere");
      const double xi1 = 2.0 * y[0] / den;
      const double xil = (y2 + 1.0) / den;
      const double cosh_ru = std::max(1.0, -(xi1 + t * xil) / frame_);
      const double sinh_ru = std::sqrt(cosh_ru * cosh_ru - 1.0);
      out.r = std::sqrt(ball_.alpha) * std::acosh(cosh_ru);
      if (sinh_ru < 1e-300) {
        out.omega[0] = 1.0;
        return out;
      }
      out.omega[0] = (t * xi1 + xil) / frame_ / sinh_ru;
      for (int i = 1; i < n; ++i) out.omega[i] = 2.0 * y[i] / den / sinh_ru;
    }
    return out;
  }

  // Polar coordinates -> y chart.
  Eigen::VectorXd from_model(double r, const Eigen::VectorXd& omega) const {
    const int n = profile_.n;
    const double t = profile_.t;
    const double ru = r / std::sqrt(ball_.alpha);
    Eigen::VectorXd y(n);
    if (profile_.branch.tag == BranchTag::Spherical) {
      const double c = std::cos(ru), s = std::sin(ru);
      const double xi1 = (c + t * s * omega[0]) / frame_;
      const double xil = (-t * c + s * omega[0]) / frame_;
      const double den = 1.0 - xil;
      if (den <= 0.0) throw GeometryError("ModelMap::from_model: north pole reached");
      y[0] = xi1 / den;
      for (int i = 1; i < n; ++i) y[i] = s * omega[i] / den;
    } else {
      const double c = std::cosh(ru), s = std::sinh(ru);
      const double xi1 = (c + t * s * omega[0]) / frame_;
      const double xil = (-t * c - s * omega[0]) / frame_;
      const double den = xil - 1.0;
      if (den <= 0.0) throw GeometryError("ModelMap::from_model: base point reached");
      y[0] = xi1 / den;
      for (int i = 1; i < n; ++i) y[i] = s * omega[i] / den;
    }
    return y;
  }

  // Zonal helpers for axisymmetric quadrature: (r, u = cos theta) <-> (y1, |y'|).
  std::pair<double, double> from_model_zonal(double r, double u) const {
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(profile_.n);
    omega[0] = u;
    omega[1] = std::sqrt(std::max(0.0, 1.0 - u * u));
    Eigen::VectorXd y = from_model(r, omega);
    return {y[0], y.tail(profile_.n - 1).norm()};
  }

  std::pair<double, double> to_model_zonal(double y1, double rho) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(profile_.n);
    y[0] = y1;
    y[1] = rho;
    ModelPolar mp = to_model(y);
    return {mp.r, mp.omega[0]};
  }

private:
  BridgeProfile profile_;
  ModelBall ball_;
  double frame_;  // sqrt(1 + t^2) or sqrt(t^2 - 1)
};

}  // namespace bridgelab
