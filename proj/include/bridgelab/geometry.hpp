#pragma once

// Constant-curvature model spaces: the curvature-scaled sine s_kappa,
// inverse stereographic charts onto S^n and H^n (upper hyperboloid in
// Minkowski space), and geodesic distances in the scaled metric
// alpha * g_eta.  Everything here is a pure function of its inputs.

#include <cmath>
#include <Eigen/Core>

#include "bridgelab/errors.hpp"

namespace bridgelab {

enum class BranchTag { Spherical, Hyperbolic };

struct Branch {
  BranchTag tag = BranchTag::Spherical;

  static Branch spherical() { return {BranchTag::Spherical}; }
  static Branch hyperbolic() { return {BranchTag::Hyperbolic}; }

  // eta = +1 iff spherical, by construction.
  int eta() const { return tag == BranchTag::Spherical ? +1 : -1; }
  const char* name() const { return tag == BranchTag::Spherical ? "spherical" : "hyperbolic"; }
  bool operator==(const Branch&) const = default;
};

// ============================================================================
// s_kappa and its derivative
// ============================================================================

// s_kappa(r) = sin(sqrt(k) r)/sqrt(k) for k>0, sinh(sqrt(-k) r)/sqrt(-k) for
// k<0.  k = 0 is rejected: the flat Escobar model (T = T_E) is out of scope.
// Near r = 0 both branches share the series r(1 - z/6 + z^2/120 - ...) in
// z = k r^2, which is what the shooting start uses to avoid cancellation.
inline double s_kappa(double kappa, double r) {
  if (kappa == 0.0) throw DomainError("s_kappa: kappa = 0 excluded (T = T_E model)");
  const double z = kappa * r * r;
  if (std::abs(z) < 1e-8) {
    return r * (1.0 - z / 6.0 + z * z / 120.0);
  }
  const double sq = std::sqrt(std::abs(kappa));
  return kappa > 0.0 ? std::sin(sq * r) / sq : std::sinh(sq * r) / sq;
}

inline double s_kappa_prime(double kappa, double r) {
  if (kappa == 0.0) throw DomainError("s_kappa_prime: kappa = 0 excluded (T = T_E model)");
  const double z = kappa * r * r;
  if (std::abs(z) < 1e-8) {
    return 1.0 - z / 2.0 + z * z / 24.0;
  }
  const double sq = std::sqrt(std::abs(kappa));
  return kappa > 0.0 ? std::cos(sq * r) : std::cosh(sq * r);
}

// ============================================================================
// Model points and charts
// ============================================================================

// Ambient point on S^n (unit Euclidean norm) or H^n (Minkowski norm -1,
// last coordinate >= 1), stored as an (n+1)-vector.
struct ModelPoint {
  Branch branch;
  Eigen::VectorXd coords;

  int ambient_dim() const { return static_cast<int>(coords.size()); }

  // Quadratic-constraint residual: |x|^2 - 1 on the sphere, <x,x>_M + 1 on
  // the hyperboloid.
  double constraint_residual() const {
    if (branch.tag == BranchTag::Spherical) return coords.squaredNorm() - 1.0;
    const int n = ambient_dim() - 1;
    double m = coords.head(n).squaredNorm() - coords[n] * coords[n];
    return m + 1.0;
  }

  void validate(double tol = 1e-12) const {
    if (std::abs(constraint_residual()) > tol)
      throw GeometryError("ModelPoint: quadratic constraint violated");
    if (branch.tag == BranchTag::Hyperbolic && coords[ambient_dim() - 1] < 1.0 - tol)
      throw GeometryError("ModelPoint: hyperboloid point below the upper sheet");
  }
};

// Pi_S^{-1}(y) = (2y, |y|^2 - 1)/(1 + |y|^2);  Pi_H^{-1}(y) = (2y, |y|^2 + 1)/(|y|^2 - 1).
inline ModelPoint stereo_inverse(Branch branch, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  const double y2 = y.squaredNorm();
  Eigen::VectorXd c(n + 1);
  if (branch.tag == BranchTag::Spherical) {
    const double den = 1.0 + y2;
    c.head(n) = 2.0 * y / den;
    c[n] = (y2 - 1.0) / den;
  } else {
    if (y2 <= 1.0) throw DomainError("stereo_inverse: hyperbolic chart requires |y| > 1");
    const double den = y2 - 1.0;
    c.head(n) = 2.0 * y / den;
    c[n] = (y2 + 1.0) / den;
  }
  return ModelPoint{branch, std::move(c)};
}

// Density of the pulled-back unit-curvature model metric against |dy|^2.
inline double conformal_factor(Branch branch, const Eigen::VectorXd& y) {
  const double y2 = y.squaredNorm();
  if (branch.tag == BranchTag::Spherical) {
    const double den = 1.0 + y2;
    return 4.0 / (den * den);
  }
  if (y2 <= 1.0) throw DomainError("conformal_factor: hyperbolic chart requires |y| > 1");
  const double den = y2 - 1.0;
  return 4.0 / (den * den);
}

// Geodesic distance in the scaled metric alpha * g_eta.
inline double geodesic_distance(Branch branch, double alpha, const ModelPoint& p,
                                const ModelPoint& q) {
  if (alpha <= 0.0) throw DomainError("geodesic_distance: alpha must be positive");
  if (p.branch.tag != branch.tag || q.branch.tag != branch.tag)
    throw GeometryError("geodesic_distance: branch mismatch");
  const double slack = 1e-10;
  const double root_alpha = std::sqrt(alpha);
  if (branch.tag == BranchTag::Spherical) {
    double dot = p.coords.dot(q.coords);
    if (dot > 1.0 + slack || dot < -1.0 - slack)
      throw GeometryError("geodesic_distance: inner product outside [-1, 1]");
    dot = std::clamp(dot, -1.0, 1.0);
    return root_alpha * std::acos(dot);
  }
  const int n = p.ambient_dim() - 1;
  double m = p.coords.head(n).dot(q.coords.head(n)) - p.coords[n] * q.coords[n];
  if (-m < 1.0 - slack)
    throw GeometryError("geodesic_distance: Minkowski product above -1");
  return root_alpha * std::acosh(std::max(1.0, -m));
}

// ============================================================================
// The reduced Robin domain
// ============================================================================

struct ModelBall {
  int n = 0;           // dimension of the ball
  Branch branch;
  double alpha = 0.0;  // conformal scale alpha_t
  double kappa = 0.0;  // curvature eta / alpha_t
  double radius = 0.0; // geodesic radius in the scaled metric
  double beta = 0.0;   // Robin coefficient

  // beta - s'_kappa(R)/s_kappa(R); zero in exact arithmetic.
  double robin_residual() const {
    return beta - s_kappa_prime(kappa, radius) / s_kappa(kappa, radius);
  }

  void validate() const {
    if (n < 3) throw DomainError("ModelBall: n must be >= 3");
    if (alpha <= 0.0 || radius <= 0.0) throw DomainError("ModelBall: alpha, radius must be positive");
    if (std::abs(kappa * alpha - branch.eta()) > 1e-12 * std::abs(branch.eta()))
      throw GeometryError("ModelBall: kappa * alpha != eta");
    if (branch.tag == BranchTag::Spherical && radius >= M_PI / std::sqrt(kappa))
      throw GeometryError("ModelBall: spherical radius exceeds the injectivity bound");
    if (std::abs(robin_residual()) > 1e-8 * std::max(1.0, std::abs(beta)))
      throw GeometryError("ModelBall: beta inconsistent with s'_kappa(R)/s_kappa(R)");
  }
};

}  // namespace bridgelab
