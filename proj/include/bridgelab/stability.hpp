#pragma once

// Perturbation experiments on the constraint manifold A_T.  Competitors are
// kept in ground-state form u = U * ghat with ghat a function on the model
// ball, so every integral the lab needs (Dirichlet energy, both constraint
// norms, cross terms against acted bubbles) reduces to 2D quadrature in
// (r, cos theta) for zonal data, or 3D for the off-axis cases at n = 3.
//
// The transport identities used throughout (polarized ground-state
// transform, with the stored sign convention for sigma):
//   ||grad(U h)||^2          = int_B |grad h|^2 dV + lambda int_B h^2 dV
//                              + sigma int_dB h^2 dS
//   <grad(U h), grad v>      = lambda int_B (v/U)^{2*-1} h dV
//                              + sigma int_dB (v/U)^{2#-1} h dS
// for any EL solution v (in particular every acted bubble).

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bridgelab/errors.hpp"
#include "bridgelab/harmonics.hpp"
#include "bridgelab/model_map.hpp"
#include "bridgelab/profile.hpp"
#include "bridgelab/robin.hpp"

namespace bridgelab {

// ============================================================================
// Group action
// ============================================================================

struct GroupElement {
  double scale = 1.0;         // critical dilation parameter a > 0
  Eigen::VectorXd shift;      // tangential shift z in R^{n-1}

  static GroupElement identity(int n) {
    return {1.0, Eigen::VectorXd::Zero(n - 1)};
  }
};

// ((a1,z1) . (a2,z2)) u = (a1,z1) . ((a2,z2) . u)
inline GroupElement compose(const GroupElement& g1, const GroupElement& g2) {
  if (g1.scale <= 0.0 || g2.scale <= 0.0) throw DomainError("compose: scales must be positive");
  return {g1.scale * g2.scale, g1.shift + g2.shift / g1.scale};
}

// Pointwise action on an arbitrary half-space function.
template <class F>
auto act(const GroupElement& g, F&& u, int n) {
  if (g.scale <= 0.0) throw DomainError("act: scale must be positive");
  return [g, u = std::forward<F>(u), n](const Eigen::VectorXd& x) {
    Eigen::VectorXd xa(n);
    xa[0] = g.scale * x[0];
    for (int i = 1; i < n; ++i) xa[i] = g.scale * (x[i] - g.shift[i - 1]);
    return std::pow(g.scale, 0.5 * (n - 2)) * u(xa);
  };
}

// The acted minimizer (a bubble of the same family) in closed form.
struct Bubble {
  int n = 0;
  Branch branch;
  double t = 0.0, C = 0.0;  // base profile data
  double a = 1.0;           // dilation
  Eigen::VectorXd z;        // tangential shift

  double eval(const Eigen::VectorXd& x) const {
    double q = branch.eta();
    const double s1 = a * x[0] - t;
    q += s1 * s1;
    for (int i = 1; i < n; ++i) {
      const double si = a * (x[i] - z[i - 1]);
      q += si * si;
    }
    return std::pow(a, 0.5 * (n - 2)) * C * std::pow(q, -0.5 * (n - 2));
  }

  // ratio v/U at the half-space point with chart coordinates (y1, tangential
  // vector yperp); the base profile is centered on the axis.
  double ratio_to_base(double y1, const Eigen::VectorXd& yperp) const {
    const double eta = branch.eta();
    const double x1 = y1 + t;
    double qb = eta + y1 * y1 + yperp.squaredNorm();
    const double s1 = a * x1 - t;
    double qa = eta + s1 * s1;
    for (Eigen::Index i = 0; i < yperp.size(); ++i) {
      const double si = a * (yperp[i] - z[i]);
      qa += si * si;
    }
    return std::pow(a, 0.5 * (n - 2)) * std::pow(qb / qa, 0.5 * (n - 2));
  }
};

inline Bubble act(const GroupElement& g, const BridgeProfile& p) {
  if (g.scale <= 0.0) throw DomainError("act: scale must be positive");
  Bubble b;
  b.n = p.n;
  b.branch = p.branch;
  b.t = p.t;
  b.C = p.C;
  b.a = g.scale;
  b.z = g.shift;
  return b;
}

// ============================================================================
// Perturbations and competitors
// ============================================================================

struct Perturbation {
  Sector sector;          // carries ell and the angular eigenvalue
  RadialFunction radial;  // f on (0, R]
  int zonal_degree = 0;   // = sector.ell; the zonal axis is omega_1 ...
  int axis = 1;           // ... unless axis = 2 selects the first tangential axis
  double amplitude = 0.0; // epsilon
};

inline Perturbation make_perturbation(const ModelMap& map, const RadialFunction& f,
                                      double amplitude, int axis = 1) {
  Perturbation p;
  p.sector = Sector::make(map.profile().n, f.ell);
  p.radial = f;
  p.zonal_degree = f.ell;
  p.axis = axis;
  p.amplitude = amplitude;
  return p;
}

// u = U * ghat with ghat = 1 + corr_a + corr_b * bump(r) + eps * f(r) Z(u_axis).
class Competitor {
public:
  Competitor(const ModelMap& map, Perturbation pert)
      : map_(&map),
        pert_(std::move(pert)),
        zonal_(map.profile().n, pert_.zonal_degree) {}

  const ModelMap& map() const { return *map_; }
  const Perturbation& perturbation() const { return pert_; }
  double eps() const { return pert_.amplitude; }
  int axis() const { return pert_.axis; }
  double corr_a() const { return corr_a_; }
  double corr_b() const { return corr_b_; }
  void set_corrections(double a, double b) {
    corr_a_ = a;
    corr_b_ = b;
  }

  double bump(double r) const { return std::pow(r / map_->ball().radius, 4); }
  double bump_deriv(double r) const {
    return 4.0 * std::pow(r / map_->ball().radius, 3) / map_->ball().radius;
  }

  double ghat(double r, double u_axis) const { return 1.0 + h(r, u_axis); }

  // the perturbation part h = ghat - 1, exact (no cancellation against 1)
  double h(double r, double u_axis) const {
    double v = corr_a_ + corr_b_ * bump(r);
    if (pert_.amplitude != 0.0) v += pert_.amplitude * pert_.radial(r) * zonal_(u_axis);
    return v;
  }
  double ghat_dr(double r, double u_axis) const {
    double v = corr_b_ * bump_deriv(r);
    if (pert_.amplitude != 0.0) v += pert_.amplitude * pert_.radial.deriv(r) * zonal_(u_axis);
    return v;
  }
  double ghat_du(double r, double u_axis) const {
    if (pert_.amplitude == 0.0) return 0.0;
    return pert_.amplitude * pert_.radial(r) * zonal_.deriv(u_axis);
  }

  // half-space evaluation of u = U * ghat
  double eval(const Eigen::VectorXd& x) const {
    const auto& p = map_->profile();
    Eigen::VectorXd y = x;
    y[0] -= p.t;
    const auto mp = map_->to_model(y);
    const double u_axis = (pert_.axis == 1) ? mp.omega[0] : mp.omega[1];
    return profile_eval(p, x).value * ghat(mp.r, u_axis);
  }

private:
  const ModelMap* map_;
  Perturbation pert_;
  ZonalHarmonic zonal_;
  double corr_a_ = 0.0, corr_b_ = 0.0;
};

// ============================================================================
// Quadrature on the ball
// ============================================================================

class LabQuad {
public:
  LabQuad(const ModelBall& ball, int r_panels = 48, int r_order = 16, int u_order = 48)
      : ball_(ball) {
    const auto& [gx, gw] = detail::gauss_legendre_rule(r_order);
    const double R = ball.radius;
    for (int p = 0; p < r_panels; ++p) {
      const double ra = R * p / r_panels, rb = R * (p + 1) / r_panels;
      for (int k = 0; k < r_order; ++k) {
        const double r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * gx[k];
        r_.push_back(r);
        wr_.push_back(0.5 * (rb - ra) * gw[k] * std::pow(s_kappa(ball.kappa, r), ball.n - 1));
      }
    }
    const auto& [ux, uw] = detail::gauss_legendre_rule(u_order);
    const double area = sphere_surface(ball.n - 1);  // |S^{n-2}|
    for (int k = 0; k < u_order; ++k) {
      const double phi = 0.5 * M_PI + 0.5 * M_PI * ux[k];  // [0, pi]
      u_.push_back(std::cos(phi));
      wu_.push_back(0.5 * M_PI * uw[k] * std::pow(std::sin(phi), ball.n - 2) * area);
    }
    sR_n1_ = std::pow(s_kappa(ball.kappa, ball.radius), ball.n - 1);
  }

  const ModelBall& ball() const { return ball_; }

  template <class F>  // F(r, u)
  double volume(F&& f) const {
    double total = 0.0;
    for (std::size_t i = 0; i < r_.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < u_.size(); ++j) acc += wu_[j] * f(r_[i], u_[j]);
      total += wr_[i] * acc;
    }
    return total;
  }

  template <class F>  // F(u) on the boundary sphere r = R
  double boundary(F&& f) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < u_.size(); ++j) acc += wu_[j] * f(u_[j]);
    return sR_n1_ * acc;
  }

  const std::vector<double>& u_nodes() const { return u_; }

private:
  ModelBall ball_;
  std::vector<double> r_, wr_, u_, wu_;
  double sR_n1_ = 0.0;
};

// ============================================================================
// Lab functionals
// ============================================================================

// Dirichlet energy of u = U * ghat through the transport identity.
inline double competitor_energy(const Competitor& c, const LabQuad& q) {
  const auto& p = c.map().profile();
  const double lambda = p.lambda, sigma = p.sigma;
  const double R = c.map().ball().radius;
  const double grad = q.volume([&](double r, double u) {
    const double dr = c.ghat_dr(r, u);
    const double du = c.ghat_du(r, u);
    const double s = s_kappa(c.map().ball().kappa, r);
    return dr * dr + (1.0 - u * u) * du * du / (s * s);
  });
  const double mass = q.volume([&](double r, double u) {
    const double g = c.ghat(r, u);
    return g * g;
  });
  const double trace = q.boundary([&](double u) {
    const double g = c.ghat(R, u);
    return g * g;
  });
  return grad + lambda * mass + sigma * trace;
}

struct ConstraintValues {
  double bulk = 0.0;   // ||u||_{2*}^{2*}
  double trace = 0.0;  // ||u||_{2#}^{2#}
};

inline ConstraintValues competitor_constraints(const Competitor& c, const LabQuad& q) {
  const auto ex = c.map().profile().exponents();
  const double R = c.map().ball().radius;
  ConstraintValues v;
  v.bulk = q.volume([&](double r, double u) {
    return std::pow(std::abs(c.ghat(r, u)), ex.two_star);
  });
  v.trace = q.boundary([&](double u) { return std::pow(std::abs(c.ghat(R, u)), ex.two_sharp); });
  return v;
}

// ============================================================================
// project_to_constraints
// ============================================================================

struct ProjectionInfo {
  double defect_bulk = 0.0;   // raw constraint defects before correction
  double defect_trace = 0.0;
  double corr_a = 0.0, corr_b = 0.0;
  int newton_iterations = 0;
};

inline Competitor project_to_constraints(const ModelMap& map, const Perturbation& pert,
                                         double eps, const LabQuad& quad,
                                         ProjectionInfo* info = nullptr) {
  Perturbation scaled = pert;
  scaled.amplitude = eps;
  Competitor c(map, scaled);
  const auto ex = map.profile().exponents();
  // Project onto the quadrature's own reference values: u is compared with U
  // through the identical rule, so eps = 0 is an exact fixed point and the
  // (multiplier-amplified) measure bias cannot leak into the deficit.
  const double target_bulk = quad.volume([](double, double) { return 1.0; });
  const double target_trace = quad.boundary([](double) { return 1.0; });
  const double R = map.ball().radius;

  auto residual = [&](double a, double b) {
    c.set_corrections(a, b);
    const auto v = competitor_constraints(c, quad);
    return std::pair<double, double>(v.bulk - target_bulk, v.trace - target_trace);
  };

  auto [f1, f2] = residual(0.0, 0.0);
  if (info) {
    info->defect_bulk = f1;
    info->defect_trace = f2 / target_trace;
  }

  // The multipliers magnify leftover constraint defects into the deficit
  // (bias ~ |lambda| * residual), so the solve runs to the quadrature's own
  // precision floor.
  double a = 0.0, b = 0.0;
  int it = 0;
  for (; it < 60; ++it) {
    if (std::abs(f1) < 1e-14 && std::abs(f2) < 1e-14 * target_trace) break;
    // analytic Jacobian of the two powered norms in the two directions
    c.set_corrections(a, b);
    const double j11 = ex.two_star * quad.volume([&](double r, double u) {
      return std::pow(std::abs(c.ghat(r, u)), ex.two_star - 1.0);
    });
    const double j12 = ex.two_star * quad.volume([&](double r, double u) {
      return std::pow(std::abs(c.ghat(r, u)), ex.two_star - 1.0) * c.bump(r);
    });
    const double j21 = ex.two_sharp * quad.boundary([&](double u) {
      return std::pow(std::abs(c.ghat(R, u)), ex.two_sharp - 1.0);
    });
    const double j22 = ex.two_sharp * quad.boundary([&](double u) {
      return std::pow(std::abs(c.ghat(R, u)), ex.two_sharp - 1.0) * c.bump(R);
    });
    const double det = j11 * j22 - j12 * j21;
    const double det_scale = std::abs(j11 * j22) + std::abs(j12 * j21);
    if (!(std::abs(det) > 1e-6 * det_scale))
      throw ProjectionError("project_to_constraints: correction Jacobian nearly singular");
    const double da = (-f1 * j22 + f2 * j12) / det;
    const double db = (-f2 * j11 + f1 * j21) / det;
    a += da;
    b += db;
    if (!(std::isfinite(a) && std::isfinite(b)) || std::abs(a) + std::abs(b) > 0.5)
      throw ProjectionError("project_to_constraints: Newton diverged; defects (" +
                            std::to_string(f1) + ", " + std::to_string(f2) + ")");
    std::tie(f1, f2) = residual(a, b);
  }
  if (std::abs(f1) >= 1e-12 || std::abs(f2) >= 1e-12 * target_trace)
    throw ProjectionError("project_to_constraints: constraints not met after Newton");
  c.set_corrections(a, b);
  if (info) {
    info->corr_a = a;
    info->corr_b = b;
    info->newton_iterations = it;
  }
  return c;
}

// ============================================================================
// deficit and nearest point
// ============================================================================

// deficit = E(ghat) - E(1), computed entirely in the perturbation variable
// h = ghat - 1:
//   delta = int |grad h|^2 dV + lambda int h(h+2) dV + sigma int_dB h(h+2) dS.
// Evaluating E and Phi^2 separately and subtracting would put the noise
// floor at eps_mach * Phi^2, which buries the small-amplitude sweep rows.
inline double deficit(const Competitor& c, const LabQuad& quad) {
  const auto& p = c.map().profile();
  const double R = c.map().ball().radius;
  const double grad = quad.volume([&](double r, double u) {
    const double dr = c.ghat_dr(r, u);
    const double du = c.ghat_du(r, u);
    const double s = s_kappa(c.map().ball().kappa, r);
    return dr * dr + (1.0 - u * u) * du * du / (s * s);
  });
  const double mass = quad.volume([&](double r, double u) {
    const double h = c.h(r, u);
    return h * (h + 2.0);
  });
  const double trace = quad.boundary([&](double u) {
    const double h = c.h(R, u);
    return h * (h + 2.0);
  });
  const double d = grad + p.lambda * mass + p.sigma * trace;
  if (d < -1e-8)
    throw ELConsistencyError("deficit: negative beyond tolerance; quadrature inconsistency");
  return d;
}

namespace detail {

// Squared distance ||grad(u - v_s)||^2 to the dilated bubble v_s = act(e^s, U),
// computed without Phi^2-scale cancellation:
//   d^2(s) = delta - 2[lambda Vol(h) + sigma Bdry(h)]
//            - 2[lambda Vol(W*(1+h)) + sigma Bdry(W#(1+h))],
// where W_p = (v_s/U)^p - 1 is evaluated through expm1/log1p so that small
// dilations keep full precision.
inline double dist2_zonal(const Competitor& c, const LabQuad& quad, double delta, double s) {
  const auto& map = c.map();
  const auto& p = map.profile();
  const auto ex = p.exponents();
  const double R = map.ball().radius;
  const double a = std::exp(s);
  const double em1 = std::expm1(s);
  const double t = p.t, eta = p.branch.eta();

  auto ratio_pow_m1 = [&](double r, double u, double power) {
    auto [y1, rho] = map.from_model_zonal(r, u);
    const double shifted = a * (y1 + t) - t;  // a x1 - t
    const double qa = eta + shifted * shifted + a * a * rho * rho;
    const double dq = -em1 * ((y1 + t) * ((1.0 + a) * y1 + t * em1) + rho * rho * (1.0 + a));
    const double logw = 0.5 * (p.n - 2.0) * (s + std::log1p(dq / qa));
    return std::expm1(power * logw);
  };

  const double lin = p.lambda * quad.volume([&](double r, double u) { return c.h(r, u); }) +
                     p.sigma * quad.boundary([&](double u) { return c.h(R, u); });
  const double cross =
      p.lambda * quad.volume([&](double r, double u) {
        return ratio_pow_m1(r, u, ex.two_star - 1.0) * (1.0 + c.h(r, u));
      }) +
      p.sigma * quad.boundary([&](double u) {
        return ratio_pow_m1(R, u, ex.two_sharp - 1.0) * (1.0 + c.h(R, u));
      });
  return delta - 2.0 * lin - 2.0 * cross;
}

}  // namespace detail

struct NearestPointResult {
  GroupElement g;
  double distance = 0.0;
  double dilation_residual = 0.0;    // <grad(u - v*), grad Z_0-direction>, relative
  double tangential_residual = 0.0;  // same for the shift directions (0 by parity for zonal data)
  int iterations = 0;
};

// Nearest manifold point for a zonal competitor: by parity the tangential
// shift vanishes, so the search is over the dilation parameter alone.
inline NearestPointResult nearest_point(const Competitor& c, const LabQuad& quad) {
  if (c.axis() != 1)
    throw NearestPointError("nearest_point: off-axis competitors use nearest_point_offaxis");
  const auto& p = c.map().profile();
  const double delta = deficit(c, quad);
  const double energy = delta + p.phi * p.phi;

  auto dist2 = [&](double s) { return detail::dist2_zonal(c, quad, delta, s); };

  // Newton on the derivative with finite differences; the optimum sits at
  // O(eps) from the identity.  The step tolerance is set by the FD noise
  // floor; since the minimum is quadratic, an O(1e-8) offset in s perturbs
  // the distance only at O(1e-16).
  double s = 0.0;
  const double h = 1e-5;
  const double noise = 1e-8 * std::max(1.0, energy);
  int it = 0;
  bool converged = false;
  for (; it < 50; ++it) {
    const double dm = dist2(s - h), d0 = dist2(s), dp = dist2(s + h);
    const double g1 = (dp - dm) / (2.0 * h);
    const double g2 = (dp - 2.0 * d0 + dm) / (h * h);
    if (!(g2 > 0.0)) throw NearestPointError("nearest_point: nonconvex dilation profile");
    double step = -g1 / g2;
    step = std::clamp(step, -0.3, 0.3);
    s += step;
    if (std::abs(step) < 1e-8 || std::abs(g1) < noise) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NearestPointError("nearest_point: dilation search did not converge");

  NearestPointResult out;
  out.g = GroupElement{std::exp(s), Eigen::VectorXd::Zero(p.n - 1)};
  const double d2 = dist2(s);
  out.distance = std::sqrt(std::max(0.0, d2));
  const double scale = std::max(1.0, energy);
  out.dilation_residual = std::abs(dist2(s + h) - dist2(s - h)) / (2.0 * h) / scale;
  out.tangential_residual = 0.0;  // exact zero by parity of zonal data
  out.iterations = it;
  return out;
}

// ============================================================================
// Off-axis nearest point (n = 3)
// ============================================================================

// Full-sphere quadrature at n = 3 for integrands depending on the whole
// direction vector: Gauss in cos(theta), trapezoid in phi (periodic, hence
// spectrally accurate).
class LabQuad3 {
public:
  LabQuad3(const ModelBall& ball, int r_panels = 40, int r_order = 12, int theta_order = 40,
           int phi_count = 48)
      : ball_(ball), phi_count_(phi_count) {
    if (ball.n != 3) throw DomainError("LabQuad3: the off-axis path is implemented for n = 3");
    const auto& [gx, gw] = detail::gauss_legendre_rule(r_order);
    const double R = ball.radius;
    for (int p = 0; p < r_panels; ++p) {
      const double ra = R * p / r_panels, rb = R * (p + 1) / r_panels;
      for (int k = 0; k < r_order; ++k) {
        const double r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * gx[k];
        r_.push_back(r);
        wr_.push_back(0.5 * (rb - ra) * gw[k] * std::pow(s_kappa(ball.kappa, r), 2));
      }
    }
    const auto& [tx, tw] = detail::gauss_legendre_rule(theta_order);
    for (int k = 0; k < theta_order; ++k) {
      ct_.push_back(tx[k]);  // cos(theta) uniform weight on [-1, 1]
      wt_.push_back(tw[k]);
    }
    sR2_ = std::pow(s_kappa(ball.kappa, ball.radius), 2);
  }

  template <class F>  // F(r, omega) with omega a unit 3-vector
  double volume(F&& f) const {
    const double dphi = 2.0 * M_PI / phi_count_;
    double total = 0.0;
    Eigen::VectorXd omega(3);
    for (std::size_t i = 0; i < r_.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ct_.size(); ++j) {
        const double st = std::sqrt(std::max(0.0, 1.0 - ct_[j] * ct_[j]));
        double accp = 0.0;
        for (int k = 0; k < phi_count_; ++k) {
          const double phi = dphi * k;
          omega[0] = ct_[j];
          omega[1] = st * std::cos(phi);
          omega[2] = st * std::sin(phi);
          accp += f(r_[i], omega);
        }
        acc += wt_[j] * accp * dphi;
      }
      total += wr_[i] * acc;
    }
    return total;
  }

  template <class F>  // F(omega) on the boundary sphere
  double boundary(F&& f) const {
    const double dphi = 2.0 * M_PI / phi_count_;
    double acc = 0.0;
    Eigen::VectorXd omega(3);
    for (std::size_t j = 0; j < ct_.size(); ++j) {
      const double st = std::sqrt(std::max(0.0, 1.0 - ct_[j] * ct_[j]));
      double accp = 0.0;
      for (int k = 0; k < phi_count_; ++k) {
        const double phi = dphi * k;
        omega[0] = ct_[j];
        omega[1] = st * std::cos(phi);
        omega[2] = st * std::sin(phi);
        accp += f(omega);
      }
      acc += wt_[j] * accp * dphi;
    }
    return sR2_ * acc;
  }

private:
  ModelBall ball_;
  int phi_count_;
  std::vector<double> r_, wr_, ct_, wt_;
  double sR2_ = 0.0;
};

// Transported representation h = v/U of an acted bubble, as a model field.
inline std::function<double(double, const Eigen::VectorXd&)> bubble_model_field(
    const ModelMap& map, const Bubble& vb) {
  return [&map, vb](double r, const Eigen::VectorXd& omega) {
    const Eigen::VectorXd y = map.from_model(r, omega);
    return vb.ratio_to_base(y[0], y.tail(y.size() - 1));
  };
}

// Nearest manifold point over (log a, zeta e_2) for a general model field h
// with known Dirichlet energy; n = 3.
inline NearestPointResult nearest_point_offaxis(
    const ModelMap& map, const std::function<double(double, const Eigen::VectorXd&)>& h,
    double energy, const LabQuad3& quad) {
  const auto& p = map.profile();
  const auto ex = p.exponents();
  const double phi2 = p.phi * p.phi;
  const double R = map.ball().radius;

  auto cross = [&](double s, double zeta) {
    GroupElement g{std::exp(s), Eigen::VectorXd::Zero(p.n - 1)};
    g.shift[0] = zeta;
    const Bubble vb = act(g, p);
    auto ratio = [&](double r, const Eigen::VectorXd& omega) {
      const Eigen::VectorXd y = map.from_model(r, omega);
      return vb.ratio_to_base(y[0], y.tail(y.size() - 1));
    };
    const double bulk = quad.volume([&](double r, const Eigen::VectorXd& omega) {
      return std::pow(ratio(r, omega), ex.two_star - 1.0) * h(r, omega);
    });
    const double trace = quad.boundary([&](const Eigen::VectorXd& omega) {
      return std::pow(ratio(R, omega), ex.two_sharp - 1.0) * h(R * (1.0 - 1e-12), omega);
    });
    return p.lambda * bulk + p.sigma * trace;
  };
  auto dist2 = [&](double s, double zeta) { return energy + phi2 - 2.0 * cross(s, zeta); };

  double s = 0.0, zeta = 0.0;
  const double hstep = 1e-4;
  int it = 0;
  for (; it < 60; ++it) {
    const double d0 = dist2(s, zeta);
    const double dsp = dist2(s + hstep, zeta), dsm = dist2(s - hstep, zeta);
    const double dzp = dist2(s, zeta + hstep), dzm = dist2(s, zeta - hstep);
    const double gs = (dsp - dsm) / (2 * hstep), gz = (dzp - dzm) / (2 * hstep);
    const double hss = (dsp - 2 * d0 + dsm) / (hstep * hstep);
    const double hzz = (dzp - 2 * d0 + dzm) / (hstep * hstep);
    const double dmix = dist2(s + hstep, zeta + hstep);
    const double hsz = (dmix - dsp - dzp + d0) / (hstep * hstep);
    const double det = hss * hzz - hsz * hsz;
    double step_s, step_z;
    if (det > 1e-12 && hss > 0.0) {
      step_s = -(gs * hzz - gz * hsz) / det;
      step_z = -(gz * hss - gs * hsz) / det;
    } else {  // gradient fallback
      step_s = -0.1 * gs;
      step_z = -0.1 * gz;
    }
    step_s = std::clamp(step_s, -0.25, 0.25);
    step_z = std::clamp(step_z, -0.25, 0.25);
    s += step_s;
    zeta += step_z;
    if (std::abs(step_s) + std::abs(step_z) < 1e-10) break;
  }
  if (it >= 60) throw NearestPointError("nearest_point_offaxis: search did not converge");

  NearestPointResult out;
  out.g = GroupElement{std::exp(s), Eigen::VectorXd::Zero(p.n - 1)};
  out.g.shift[0] = zeta;
  out.distance = std::sqrt(std::max(0.0, dist2(s, zeta)));
  const double scale = std::max({1.0, energy, phi2});
  out.dilation_residual =
      std::abs(dist2(s + hstep, zeta) - dist2(s - hstep, zeta)) / (2 * hstep) / scale;
  out.tangential_residual =
      std::abs(dist2(s, zeta + hstep) - dist2(s, zeta - hstep)) / (2 * hstep) / scale;
  out.iterations = it;
  return out;
}

// ============================================================================
// Stability sweep
// ============================================================================

struct SweepRow {
  double eps = 0.0;
  double deficit = 0.0;
  double distance = 0.0;
  double ratio = 0.0;       // deficit / distance^2
  double correction = 0.0;  // |corr_a| + |corr_b|
  double defect = 0.0;      // raw constraint defect before correction
};

struct StabilityReport {
  std::string profile_id;
  std::string perturbation_id;
  std::vector<SweepRow> sweep;       // sorted by decreasing eps
  double fitted_coefficient = 0.0;   // eps -> 0 limit of deficit/distance^2
  double q_half = 0.0;               // Q_l(f) / (2 N_l(f))
  double gap_half = 0.0;             // Lambda_T / 2
  double correction_slope = 0.0;     // log-log slope of the Newton correction size
  double defect_slope = 0.0;         // log-log slope of the raw defect
};

inline StabilityReport stability_sweep(const ModelMap& map, const Perturbation& pert,
                                       const std::vector<double>& eps_list, double gap_half,
                                       const LabQuad& quad) {
  if (eps_list.size() < 4) throw DomainError("stability_sweep: need at least 4 epsilon values");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i] <= eps_list[i + 1])
      throw DomainError("stability_sweep: eps_list must be strictly decreasing");

  StabilityReport rep;
  rep.gap_half = gap_half;
  {
    const auto& ball = map.ball();
    RadialFunction f = pert.radial;
    rep.q_half = q_form_sector(ball, pert.sector.ell, f) /
                 (2.0 * n_form_sector(ball, map.profile(), pert.sector.ell, f));
  }

  for (double eps : eps_list) {
    ProjectionInfo info;
    Competitor u = project_to_constraints(map, pert, eps, quad, &info);
    SweepRow row;
    row.eps = eps;
    row.deficit = deficit(u, quad);
    const auto np = nearest_point(u, quad);
    row.distance = np.distance;
    row.ratio = row.distance > 0.0 ? row.deficit / (row.distance * row.distance) : 0.0;
    row.correction = std::abs(info.corr_a) + std::abs(info.corr_b);
    row.defect = std::abs(info.defect_bulk) + std::abs(info.defect_trace);
    rep.sweep.push_back(row);
  }

  // Quadratic-in-eps extrapolation of the ratio, weighted by eps^2: the
  // absolute deficit noise is amplitude-independent, so the ratio noise
  // scales like 1/eps^2 and the small rows deserve proportionally less say.
  {
    const auto m = static_cast<Eigen::Index>(rep.sweep.size());
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = rep.sweep[i].eps;
      const double w = e * e;
      A(i, 0) = w;
      A(i, 1) = w * e;
      A(i, 2) = w * e * e;
      b[i] = w * rep.sweep[i].ratio;
    }
    rep.fitted_coefficient = A.colPivHouseholderQr().solve(b)[0];
  }

  // Log-log slopes of the correction size and the raw defect.
  auto slope = [&](auto&& get) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : rep.sweep) {
      const double v = get(row);
      if (v <= 0.0) continue;
      const double lx = std::log(row.eps), ly = std::log(v);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    return m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
  };
  rep.correction_slope = slope([](const SweepRow& r) { return r.correction; });
  rep.defect_slope = slope([](const SweepRow& r) { return r.defect; });
  return rep;
}

}  // namespace bridgelab
