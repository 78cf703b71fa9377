#pragma once

// The reduced Robin eigenvalue problem on the model ball.  Per spherical-
// harmonic sector l the two radial quadratic forms are
//
//   Q_l(f) = int_0^R (f'^2 + l(l+n-2) s^{-2} f^2 - n kappa f^2) s^{n-1} dr
//            - beta s(R)^{n-1} f(R)^2,
//   N_l(f) = int_0^R (f'^2 + l(l+n-2) s^{-2} f^2 + lambda f^2) s^{n-1} dr
//            + sigma s(R)^{n-1} f(R)^2,
//
// with s = s_kappa.  N_l is the transported half-space Dirichlet energy of
// the lift psi = U (f Y) o F, the denominator the spectral gap is measured
// against.  Sector bottoms of Q_l/N_l are computed two independent ways: a
// P1 finite-element pencil on cosine-graded grids (Sturm bisection, the
// secular equation for the rank-one constrained case, Richardson over two
// grids), cross-validated by Frobenius-started adaptive Runge-Kutta shooting
// on the exact Euler-Lagrange system of the pencil (with a scalar multiplier
// for the radial two-constraint sector).

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bridgelab/errors.hpp"
#include "bridgelab/geometry.hpp"
#include "bridgelab/harmonics.hpp"
#include "bridgelab/model_map.hpp"
#include "bridgelab/profile.hpp"

namespace bridgelab {

// ============================================================================
// Radial functions on (0, R]
// ============================================================================

struct RadialFunction {
  Eigen::ArrayXd grid;    // strictly increasing nodes in (0, R]
  Eigen::ArrayXd values;  // f(r_i)
  Eigen::ArrayXd derivs;  // f'(r_i)
  int ell = 0;

  // Cubic Hermite interpolation.
  double operator()(double r) const { return interp(r).first; }
  double deriv(double r) const { return interp(r).second; }

  std::pair<double, double> interp(double r) const {
    const auto m = static_cast<Eigen::Index>(grid.size());
    if (r <= grid[0]) return {values[0] + (r - grid[0]) * derivs[0], derivs[0]};
    if (r >= grid[m - 1])
      return {values[m - 1] + (r - grid[m - 1]) * derivs[m - 1], derivs[m - 1]};
    Eigen::Index lo = 0, hi = m - 1;
    while (hi - lo > 1) {
      Eigen::Index mid = (lo + hi) / 2;
      (grid[mid] <= r ? lo : hi) = mid;
    }
    const double h = grid[lo + 1] - grid[lo];
    const double s = (r - grid[lo]) / h;
    const double f0 = values[lo], f1 = values[lo + 1];
    const double d0 = derivs[lo] * h, d1 = derivs[lo + 1] * h;
    const double s2 = s * s, s3 = s2 * s;
    const double val = (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0 +
                       (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * d1;
    const double der = ((6 * s2 - 6 * s) * f0 + (3 * s2 - 4 * s + 1) * d0 +
                        (-6 * s2 + 6 * s) * f1 + (3 * s2 - 2 * s) * d1) / h;
    return {val, der};
  }
};

// Cosine-graded nodes on [a, b] (dense near both ends), m+1 nodes.
inline Eigen::ArrayXd cosine_grid(double a, double b, int m) {
  Eigen::ArrayXd r(m + 1);
  for (int i = 0; i <= m; ++i)
    r[i] = a + (b - a) * 0.5 * (1.0 - std::cos(M_PI * i / m));
  return r;
}

// Integral of samples over a smooth nonuniform grid by piecewise quadratics
// (nonuniform composite Simpson).
namespace detail {

inline double lagrange2_integral(double xa, double fa, double xb, double fb, double xc,
                                 double fc, double p, double q) {
  // work in coordinates centered at the pair midpoint: the antiderivative
  // differences are O(h^3) against an O(h^2) denominator, so absolute
  // coordinates would lose most of the digits
  const double c = 0.5 * (p + q);
  const double za = xa - c, zb = xb - c, zc = xc - c, zp = p - c, zq = q - c;
  auto basis = [&](double x0, double x1, double x2) {
    auto F = [&](double x) {
      return x * x * x / 3.0 - (x1 + x2) * x * x / 2.0 + x1 * x2 * x;
    };
    return (F(zq) - F(zp)) / ((x0 - x1) * (x0 - x2));
  };
  return fa * basis(za, zb, zc) + fb * basis(zb, za, zc) + fc * basis(zc, za, zb);
}

}  // namespace detail

inline double integrate_samples(const Eigen::ArrayXd& x, const Eigen::ArrayXd& g) {
  const auto m = static_cast<Eigen::Index>(x.size()) - 1;
  if (m < 2) throw GridError("integrate_samples: need at least 3 nodes");
  double total = 0.0;
  Eigen::Index i = 0;
  for (; i + 2 <= m; i += 2)
    total += detail::lagrange2_integral(x[i], g[i], x[i + 1], g[i + 1], x[i + 2], g[i + 2],
                                        x[i], x[i + 2]);
  if (i < m)  // one interval left; quadratic through the last three nodes
    total += detail::lagrange2_integral(x[m - 2], g[m - 2], x[m - 1], g[m - 1], x[m], g[m],
                                        x[m - 1], x[m]);
  return total;
}

// ============================================================================
// Sector forms
// ============================================================================

namespace detail {

// lambda and sigma are determined by the ball: lambda = n(n-2)kappa/4 and
// sigma = beta (n-2)/2 (the inverse of beta = (2#-2) sigma).
inline double ball_lambda(const ModelBall& b) { return 0.25 * b.n * (b.n - 2.0) * b.kappa; }
inline double ball_sigma(const ModelBall& b) { return 0.5 * (b.n - 2.0) * b.beta; }

}  // namespace detail

// Q_l(f); the angular term is evaluated as l(l+n-2) f^2 s^{n-3} to stay
// finite at small r.
inline double q_form_sector(const ModelBall& ball, int ell, const RadialFunction& f) {
  const int n = ball.n;
  const double ll = static_cast<double>(ell) * (ell + n - 2);
  Eigen::ArrayXd integrand(f.grid.size());
  for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
    const double s = s_kappa(ball.kappa, f.grid[i]);
    const double fp = f.derivs[i], fv = f.values[i];
    integrand[i] = (fp * fp - n * ball.kappa * fv * fv) * std::pow(s, n - 1) +
                   ll * fv * fv * std::pow(s, n - 3);
  }
  const double sR = s_kappa(ball.kappa, ball.radius);
  const double fR = f.values[f.values.size() - 1];
  return integrate_samples(f.grid, integrand) -
         ball.beta * std::pow(sR, n - 1) * fR * fR;
}

// N_l(f,g), the transported Dirichlet inner product restricted to the sector.
inline double n_form_sector_bilinear(const ModelBall& ball, int ell, const RadialFunction& f,
                                     const RadialFunction& g) {
  const int n = ball.n;
  const double ll = static_cast<double>(ell) * (ell + n - 2);
  const double lambda = detail::ball_lambda(ball);
  const double sigma = detail::ball_sigma(ball);
  Eigen::ArrayXd integrand(f.grid.size());
  for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
    const double s = s_kappa(ball.kappa, f.grid[i]);
    integrand[i] = (f.derivs[i] * g.derivs[i] + lambda * f.values[i] * g.values[i]) *
                       std::pow(s, n - 1) +
                   ll * f.values[i] * g.values[i] * std::pow(s, n - 3);
  }
  const double sR = s_kappa(ball.kappa, ball.radius);
  const auto last = f.values.size() - 1;
  return integrate_samples(f.grid, integrand) +
         sigma * std::pow(sR, n - 1) * f.values[last] * g.values[last];
}

inline double n_form_sector(const ModelBall& ball, const BridgeProfile& profile, int ell,
                            const RadialFunction& f) {
  (void)profile;  // multipliers are ball-determined; profile consistency is checked upstream
  const double v = n_form_sector_bilinear(ball, ell, f, f);
  if (f.values.abs().maxCoeff() > 0.0 && v <= 0.0)
    throw TransportError("n_form_sector: transported Dirichlet energy not positive");
  return v;
}

// ============================================================================
// Shooting on the pencil's Euler-Lagrange system
// ============================================================================

namespace detail {

// Adaptive Cash-Karp RK45 for the second-order radial system, with an
// optional inhomogeneity rhs(r).  Integrates over [grid[0], grid.tail] and
// records nodal values of (f, f').
struct RadialOde {
  const ModelBall* ball;
  double ll;       // l(l+n-2)
  double coef;     // (n kappa + mu lambda)/(1-mu)
  double rhs_amp;  // amplitude of the inhomogeneity
  int rhs_mode;    // 0: none, 1: constant, 2: proportional to s_kappa(r)

  void eval(double r, double u, double v, double& du, double& dv) const {
    const double s = s_kappa(ball->kappa, r);
    const double sp = s_kappa_prime(ball->kappa, r);
    double rhs = 0.0;
    if (rhs_mode == 1) rhs = rhs_amp;
    if (rhs_mode == 2) rhs = rhs_amp * s;
    du = v;
    dv = -(ball->n - 1.0) * (sp / s) * v + (ll / (s * s)) * u - coef * u - rhs;
  }
};

inline void rk_step(const RadialOde& ode, double r, double h, double u, double v, double& u_out,
                    double& v_out, double& err_u, double& err_v) {
  // Cash-Karp tableau
  static const double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0, a6 = 7.0 / 8;
  static const double b21 = 1.0 / 5;
  static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                      b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
  static const double d1 = 2825.0 / 27648, d3 = 18575.0 / 48384, d4 = 13525.0 / 55296,
                      d5 = 277.0 / 14336, d6 = 1.0 / 4;

  double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, k5u, k5v, k6u, k6v;
  ode.eval(r, u, v, k1u, k1v);
  ode.eval(r + a2 * h, u + h * b21 * k1u, v + h * b21 * k1v, k2u, k2v);
  ode.eval(r + a3 * h, u + h * (b31 * k1u + b32 * k2u), v + h * (b31 * k1v + b32 * k2v), k3u, k3v);
  ode.eval(r + a4 * h, u + h * (b41 * k1u + b42 * k2u + b43 * k3u),
           v + h * (b41 * k1v + b42 * k2v + b43 * k3v), k4u, k4v);
  ode.eval(r + a5 * h, u + h * (b51 * k1u + b52 * k2u + b53 * k3u + b54 * k4u),
           v + h * (b51 * k1v + b52 * k2v + b53 * k3v + b54 * k4v), k5u, k5v);
  ode.eval(r + a6 * h, u + h * (b61 * k1u + b62 * k2u + b63 * k3u + b64 * k4u + b65 * k5u),
           v + h * (b61 * k1v + b62 * k2v + b63 * k3v + b64 * k4v + b65 * k5v), k6u, k6v);

  u_out = u + h * (c1 * k1u + c3 * k3u + c4 * k4u + c6 * k6u);
  v_out = v + h * (c1 * k1v + c3 * k3v + c4 * k4v + c6 * k6v);
  err_u = std::abs(u_out - (u + h * (d1 * k1u + d3 * k3u + d4 * k4u + d5 * k5u + d6 * k6u)));
  err_v = std::abs(v_out - (v + h * (d1 * k1v + d3 * k3v + d4 * k4v + d5 * k5v + d6 * k6v)));
}

// Integrate with dense output at the given nodes; returns (values, derivs).
// The solution may be rescaled en route (linear ODE); `scale_log` accumulates
// the log of the applied rescaling so callers can undo it if needed.
inline void integrate_radial(const RadialOde& ode, const Eigen::ArrayXd& nodes, double u0,
                             double v0, double tol, Eigen::ArrayXd& values,
                             Eigen::ArrayXd& derivs) {
  const auto m = nodes.size();
  values.resize(m);
  derivs.resize(m);
  double r = nodes[0], u = u0, v = v0;
  values[0] = u;
  derivs[0] = v;
  double h = (nodes[m - 1] - nodes[0]) * 1e-4;
  for (Eigen::Index i = 1; i < m; ++i) {
    const double target = nodes[i];
    while (r < target) {
      const double h_try = std::min(h, target - r);
      double un, vn, err_u, err_v;
      rk_step(ode, r, h_try, u, v, un, vn, err_u, err_v);
      // componentwise relative control: u and v live on very different scales
      const double su = tol * std::max({std::abs(u), std::abs(un), 1e-280});
      const double sv = tol * std::max({std::abs(v), std::abs(vn), 1e-280});
      const double ratio = std::max(err_u / su, err_v / sv);
      if (ratio <= 1.0 || h_try <= 1e-14 * (nodes[m - 1] - nodes[0])) {
        r += h_try;
        u = un;
        v = vn;
        const double grow = (ratio > 0.0) ? 0.9 * std::pow(1.0 / ratio, 0.2) : 5.0;
        h = h_try * std::clamp(grow, 1.0, 5.0);
      } else {
        h = h_try * std::clamp(0.9 * std::pow(1.0 / ratio, 0.25), 0.1, 0.9);
      }
    }
    values[i] = u;
    derivs[i] = v;
    r = target;
  }
}

}  // namespace detail

struct ShootResult {
  double mismatch = 0.0;  // (f'(R) - b(mu) f(R)) / max|f|
  RadialFunction f;
};

// Frobenius-started shooting for the sector ODE at spectral parameter mu
// (mu = 0 is the kernel equation).  The pencil's strong form is
//   f'' + (n-1)(s'/s) f' - l(l+n-2) s^{-2} f + (n kappa + mu lambda)/(1-mu) f = 0
// with Robin mismatch f'(R) - (beta + mu sigma)/(1-mu) f(R).
inline ShootResult shoot(const ModelBall& ball, int ell, double mu, int out_nodes = 1600,
                         double tol = 1e-12) {
  if (mu >= 1.0 - 1e-9) throw DomainError("shoot: mu must be < 1 (pencil degenerates)");
  const double R = ball.radius;
  const double r0 = 1e-6 * R;
  const double lambda = detail::ball_lambda(ball);
  const double sigma = detail::ball_sigma(ball);

  detail::RadialOde ode;
  ode.ball = &ball;
  ode.ll = static_cast<double>(ell) * (ell + ball.n - 2);
  ode.coef = (ball.n * ball.kappa + mu * lambda) / (1.0 - mu);
  ode.rhs_amp = 0.0;
  ode.rhs_mode = 0;

  ShootResult out;
  out.f.ell = ell;
  out.f.grid = cosine_grid(r0, R, out_nodes);
  const double u0 = std::pow(r0, ell);
  const double v0 = (ell == 0) ? 0.0 : ell * std::pow(r0, ell - 1);
  detail::integrate_radial(ode, out.f.grid, u0, v0, tol, out.f.values, out.f.derivs);

  const double robin = (ball.beta + mu * sigma) / (1.0 - mu);
  const auto last = out.f.values.size() - 1;
  const double fmax = out.f.values.abs().maxCoeff();
  out.mismatch = (out.f.derivs[last] - robin * out.f.values[last]) / std::max(fmax, 1e-300);
  return out;
}

// ============================================================================
// Finite-element discretization of (Q_l, N_l)
// ============================================================================

namespace detail {

struct SectorMatrices {
  Eigen::ArrayXd a_diag, a_off;  // Q_l, symmetric tridiagonal over the DOFs
  Eigen::ArrayXd b_diag, b_off;  // N_l
  std::vector<Eigen::VectorXd> constraints;
  Eigen::ArrayXd dof_r;  // DOF -> node radius
  int ell = 0;
  bool boundary_dof = true;  // false when f(R) = 0 is imposed by dropping the DOF
};

// P1 elements on a cosine grid over [0, R].  4-point Gauss per element for
// the smooth weights; Dirichlet at r = 0 for l >= 1 (the only H^1-admissible
// Frobenius branch vanishes there), natural for l = 0.
inline SectorMatrices assemble_sector(const ModelBall& ball, int ell, int m_elems,
                                      bool drop_boundary_dof, bool volume_constraint) {
  const int n = ball.n;
  const double ll = static_cast<double>(ell) * (ell + n - 2);
  const double lambda = ball_lambda(ball);
  const double sigma = ball_sigma(ball);
  const Eigen::ArrayXd nodes = cosine_grid(0.0, ball.radius, m_elems);

  const bool dirichlet0 = (ell >= 1);
  const int first = dirichlet0 ? 1 : 0;
  const int last_node = m_elems;
  const int last = drop_boundary_dof ? last_node - 1 : last_node;
  const int ndof = last - first + 1;
  if (ndof < 8) throw GridError("assemble_sector: grid too coarse");

  SectorMatrices mats;
  mats.ell = ell;
  mats.boundary_dof = !drop_boundary_dof;
  mats.a_diag = Eigen::ArrayXd::Zero(ndof);
  mats.a_off = Eigen::ArrayXd::Zero(ndof - 1);
  mats.b_diag = Eigen::ArrayXd::Zero(ndof);
  mats.b_off = Eigen::ArrayXd::Zero(ndof - 1);
  mats.dof_r = nodes.segment(first, ndof);
  Eigen::VectorXd volume = Eigen::VectorXd::Zero(ndof);

  const auto& [gx, gw] = gauss_legendre_rule(4);
  auto dof_of = [&](int node) { return node - first; };

  for (int e = 0; e < m_elems; ++e) {
    const double ra = nodes[e], rb = nodes[e + 1];
    const double h = rb - ra;
    double stiff = 0.0, mass_q[3] = {0, 0, 0}, mass_n[3] = {0, 0, 0}, load[2] = {0, 0};
    for (int k = 0; k < 4; ++k) {
      const double r = 0.5 * (ra + rb) + 0.5 * h * gx[k];
      const double w = 0.5 * h * gw[k];
      const double s = s_kappa(ball.kappa, r);
      const double sn1 = std::pow(s, n - 1);
      const double sn3 = std::pow(s, n - 3);
      const double pa = (rb - r) / h, pb = (r - ra) / h;
      stiff += w * sn1;
      const double wq = ll * sn3 - n * ball.kappa * sn1;  // zeroth-order weight of Q
      const double wn = ll * sn3 + lambda * sn1;          // zeroth-order weight of N
      mass_q[0] += w * wq * pa * pa;
      mass_q[1] += w * wq * pa * pb;
      mass_q[2] += w * wq * pb * pb;
      mass_n[0] += w * wn * pa * pa;
      mass_n[1] += w * wn * pa * pb;
      mass_n[2] += w * wn * pb * pb;
      load[0] += w * sn1 * pa;
      load[1] += w * sn1 * pb;
    }
    const double k_el = stiff / (h * h);
    const int ia = e, ib = e + 1;
    auto add = [&](int node_a, int node_b, double qa, double qoff, double qb, double na,
                   double noff, double nb) {
      const bool va = node_a >= first && node_a <= last;
      const bool vb = node_b >= first && node_b <= last;
      if (va) {
        mats.a_diag[dof_of(node_a)] += qa;
        mats.b_diag[dof_of(node_a)] += na;
      }
      if (vb) {
        mats.a_diag[dof_of(node_b)] += qb;
        mats.b_diag[dof_of(node_b)] += nb;
      }
      if (va && vb) {
        mats.a_off[dof_of(node_a)] += qoff;
        mats.b_off[dof_of(node_a)] += noff;
      }
    };
    add(ia, ib, k_el + mass_q[0], -k_el + mass_q[1], k_el + mass_q[2], k_el + mass_n[0],
        -k_el + mass_n[1], k_el + mass_n[2]);
    if (ia >= first && ia <= last) volume[dof_of(ia)] += load[0];
    if (ib >= first && ib <= last) volume[dof_of(ib)] += load[1];
  }

  if (!drop_boundary_dof) {
    const double sRn1 = std::pow(s_kappa(ball.kappa, ball.radius), n - 1);
    mats.a_diag[ndof - 1] -= ball.beta * sRn1;
    mats.b_diag[ndof - 1] += sigma * sRn1;
  }

  if (volume_constraint) mats.constraints.push_back(volume);
  return mats;
}

// B-matvec for the tridiagonal form.
inline Eigen::VectorXd tri_apply(const Eigen::ArrayXd& diag, const Eigen::ArrayXd& off,
                                 const Eigen::VectorXd& x) {
  const auto n = diag.size();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

// Number of eigenvalues of the tridiagonal pencil (A, B) below shift, by the
// Sturm sign count of A - shift B.
inline int sturm_count_below(const SectorMatrices& m, double shift) {
  const auto n = m.a_diag.size();
  int count = 0;
  double d_prev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = m.a_diag[i] - shift * m.b_diag[i];
    if (i > 0) {
      const double off = m.a_off[i - 1] - shift * m.b_off[i - 1];
      d -= off * off / d_prev;
    }
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
    d_prev = d;
  }
  return count;
}

// j-th smallest (1-based) eigenvalue of the unconstrained tridiagonal pencil
// by Sturm bisection.  Robust against clusters, which form near the pencil
// degeneracy mu = 1 on nearly-degenerate balls.
inline double sturm_eigenvalue(const SectorMatrices& m, int j) {
  double lo = -1.0, hi = 2.0;
  for (int k = 0; k < 60 && sturm_count_below(m, lo) > 0; ++k) lo *= 2.0;
  for (int k = 0; k < 60 && sturm_count_below(m, hi) < j; ++k) hi *= 2.0;
  if (sturm_count_below(m, lo) > 0 || sturm_count_below(m, hi) < j)
    throw GridError("sturm_eigenvalue: could not bracket the requested eigenvalue");
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count_below(m, mid) >= j ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Tridiagonal solve (A - mu B) x = rhs via SparseLU (pivoted, robust for the
// indefinite shifts that appear between pencil eigenvalues).
inline Eigen::VectorXd shifted_tri_solve(const SectorMatrices& m, double mu,
                                         const Eigen::VectorXd& rhs) {
  const auto n = m.a_diag.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    trip.emplace_back(i, i, m.a_diag[i] - mu * m.b_diag[i]);
    if (i + 1 < n) {
      const double off = m.a_off[i] - mu * m.b_off[i];
      trip.emplace_back(i, i + 1, off);
      trip.emplace_back(i + 1, i, off);
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) throw GridError("shifted_tri_solve: factorization failed");
  return lu.solve(rhs);
}

// Bottom of the pencil restricted to {c^T x = 0} for a single constraint:
// the root of the secular function g(mu) = c^T (A - mu B)^{-1} c, which is
// strictly increasing between the unconstrained poles lambda_1 < lambda_2,
// running from -inf to +inf.  Bisection on the sign is therefore exact.
inline std::pair<double, Eigen::VectorXd> secular_constrained_bottom(const SectorMatrices& m,
                                                                     double lam1, double lam2) {
  if (m.constraints.size() != 1)
    throw GridError("secular_constrained_bottom: expects exactly one constraint");
  const Eigen::VectorXd& c = m.constraints[0];
  auto g = [&](double mu) { return c.dot(shifted_tri_solve(m, mu, c)); };
  const double pad = 1e-12 * std::max(1.0, std::abs(lam2)) + 1e-9 * (lam2 - lam1);
  double lo = lam1 + pad, hi = lam2 - pad;
  double glo = g(lo), ghi = g(hi);
  if (!(glo < 0.0 && ghi > 0.0)) {
    // c nearly orthogonal to the ground eigenvector: the bottom is lambda_1
    if (glo > 0.0) {
      Eigen::VectorXd x = shifted_tri_solve(m, lam1 + pad, c);
      return {lam1, x};
    }
    throw GridError("secular_constrained_bottom: no sign change inside (lambda_1, lambda_2)");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  Eigen::VectorXd x = shifted_tri_solve(m, mu, c);
  x /= x.norm();
  return {mu, x};
}


}  // namespace detail

// ============================================================================
// Sector bottoms
// ============================================================================

enum class SectorConstraint {
  Auto,              // l = 0 -> RadialPair, l = 1 -> KernelOrthogonal, else None
  None,
  RadialPair,        // int f s^{n-1} dr = 0 and f(R) = 0
  KernelOrthogonal,  // N-orthogonality to s_kappa
};

struct SpectralOptions {
  int fe_nodes = 2000;   // elements on the fine grid (doubled for Richardson)
  int out_nodes = 1600;  // dense-output nodes for shooting
  double rk_tol = 1e-12;
  int l_max = 10;
};

struct SectorDiagnostics {
  double fe_value = 0.0;          // fine grid
  double fe_value_coarse = 0.0;   // half resolution
  double richardson = 0.0;
  double shoot_value = 0.0;
  double shoot_fe_agreement = 0.0;  // |shoot - richardson|
  double shoot_residual = 0.0;      // boundary/constraint residual of the refined solution
  bool shoot_refined = false;       // false when mu sits too close to the pencil degeneracy
};

struct SectorBottom {
  int ell = 0;
  double value = 0.0;  // shooting-refined constrained bottom of Q_l / N_l
  RadialFunction argmin;
  bool argmin_attained = true;  // false when the infimum is essential (mu -> 1 cluster)
  std::string constraint;
  SectorDiagnostics diag;
};

namespace detail {

// Scalar condition whose root in mu is the radial-pair constrained bottom,
// evaluated by multiplier-augmented shooting.  (The l = 1 orthogonality
// constraint needs no multiplier: pairing the stationarity equation with the
// kernel profile s_kappa gives gamma * N(s_kappa, s_kappa) = 0 because
// A s_kappa = 0, so constrained eigenfunctions are simply the higher
// unconstrained ones, refined by the plain Robin mismatch.)
struct RadialPairShooter {
  const ModelBall* ball;
  int out_nodes;
  double rk_tol;

  double operator()(double mu, RadialFunction* out = nullptr) const {
    const ModelBall& b = *ball;
    const double lambda = ball_lambda(b);
    const double R = b.radius;
    const double r0 = 1e-6 * R;
    const Eigen::ArrayXd grid = cosine_grid(r0, R, out_nodes);

    RadialOde ode;
    ode.ball = &b;
    ode.ll = 0.0;
    ode.coef = (b.n * b.kappa + mu * lambda) / (1.0 - mu);
    ode.rhs_mode = 0;
    ode.rhs_amp = 0.0;

    Eigen::ArrayXd uh, vh, up, vp;
    integrate_radial(ode, grid, 1.0, 0.0, rk_tol, uh, vh);
    RadialOde ode_p = ode;
    ode_p.rhs_mode = 1;
    ode_p.rhs_amp = 1.0 / (1.0 - mu);
    integrate_radial(ode_p, grid, 0.0, 0.0, rk_tol, up, vp);

    const auto last = grid.size() - 1;
    // f(R) = 0 fixes the multiplier; the volume constraint is the root
    // condition.
    const double gamma = -uh[last] / up[last];
    Eigen::ArrayXd f = uh + gamma * up;
    Eigen::ArrayXd integrand(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      integrand[i] = f[i] * std::pow(s_kappa(b.kappa, grid[i]), b.n - 1);
    const double condition =
        integrate_samples(grid, integrand) / std::max(f.abs().maxCoeff(), 1e-300);
    if (out) {
      out->grid = grid;
      out->values = f;
      out->derivs = vh + gamma * vp;
      out->ell = 0;
    }
    return condition;
  }
};

// Root-find g(mu) = 0 near an initial guess by bracket expansion + bisection
// with secant polish.
template <class G>
double refine_root(G&& g, double mu_guess, double scale) {
  double d = std::max(1e-6, 1e-4 * scale);
  double lo = mu_guess - d, hi = mu_guess + d;
  double glo = g(lo), ghi = g(hi);
  for (int k = 0; k < 24 && glo * ghi > 0.0; ++k) {
    d *= 2.0;
    lo = mu_guess - d;
    hi = std::min(mu_guess + d, 0.999);
    glo = g(lo);
    ghi = g(hi);
  }
  if (glo * ghi > 0.0) throw RootError("refine_root: no sign change near the FE eigenvalue");
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (glo * gm <= 0.0) {
      hi = mid;
      ghi = gm;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline SectorBottom sector_bottom(const ModelBall& ball, const BridgeProfile& profile, int ell,
                                  SectorConstraint constraint = SectorConstraint::Auto,
                                  const SpectralOptions& opt = {}) {
  // the N-form multipliers are ball-determined; a mismatched pair is a bug
  if (profile.n != ball.n ||
      std::abs(profile.lambda - detail::ball_lambda(ball)) >
          1e-6 * std::max(1.0, std::abs(profile.lambda)) ||
      std::abs(profile.sigma - detail::ball_sigma(ball)) >
          1e-6 * std::max(1.0, std::abs(profile.sigma)))
    throw DomainError("sector_bottom: profile and ball multipliers disagree");
  if (constraint == SectorConstraint::Auto)
    constraint = (ell == 0)   ? SectorConstraint::RadialPair
                 : (ell == 1) ? SectorConstraint::KernelOrthogonal
                              : SectorConstraint::None;
  if (constraint == SectorConstraint::RadialPair && ell != 0)
    throw DomainError("sector_bottom: RadialPair constraints are the l = 0 case");

  const bool drop_bdof = (constraint == SectorConstraint::RadialPair);
  const bool vol_con = (constraint == SectorConstraint::RadialPair);

  auto build = [&](int m_elems) {
    auto mats = detail::assemble_sector(ball, ell, m_elems, drop_bdof, vol_con);
    if (constraint == SectorConstraint::KernelOrthogonal) {
      Eigen::VectorXd s_nodes(mats.dof_r.size());
      for (Eigen::Index i = 0; i < mats.dof_r.size(); ++i)
        s_nodes[i] = s_kappa(ball.kappa, mats.dof_r[i]);
      mats.constraints.push_back(detail::tri_apply(mats.b_diag, mats.b_off, s_nodes));
    }
    // unit-normalize constraint columns: their raw entries scale like h
    // while the stiffness scales like 1/h, which otherwise ruins the
    // conditioning of the bordered factorization on fine grids
    for (auto& c : mats.constraints) c /= c.norm();
    return mats;
  };

  // Nearly-degenerate balls (|kappa| R^2 large) need proportionally more
  // elements to keep the P1 eigenvalue error at the 1e-6 agreement level.
  const double stiffness = std::abs(ball.kappa) * ball.radius * ball.radius;
  const int refine = std::clamp(static_cast<int>(std::ceil(stiffness / 16.0)), 1, 8);

  // Constrained bottom on one grid.  Sturm bisection handles the two cases
  // without multipliers exactly (the kernel-orthogonal bottom is the second
  // unconstrained eigenvalue, since the multiplier vanishes against the
  // pencil kernel); the radial-pair case is certified by interlacing and
  // located by shifted bordered inverse iteration inside [lambda_1, lambda_2].
  auto solve_at = [&](int m_elems) -> std::pair<double, Eigen::VectorXd> {
    auto mats = build(m_elems);
    if (constraint == SectorConstraint::None)
      return {detail::sturm_eigenvalue(mats, 1), Eigen::VectorXd()};
    if (constraint == SectorConstraint::KernelOrthogonal)
      return {detail::sturm_eigenvalue(mats, 2), Eigen::VectorXd()};
    const double lam1 = detail::sturm_eigenvalue(mats, 1);
    const double lam2 = detail::sturm_eigenvalue(mats, 2);
    return detail::secular_constrained_bottom(mats, lam1, lam2);
  };
  const double mu_h = solve_at(refine * opt.fe_nodes).first;
  auto fine2 = solve_at(2 * refine * opt.fe_nodes);
  const double mu_h2 = fine2.first;
  const double mu_rich = (4.0 * mu_h2 - mu_h) / 3.0;
  if (std::abs(mu_h - mu_h2) > 0.2 * std::abs(mu_h) + 1e-2)
    throw GridError("sector_bottom: Richardson extrapolation did not converge");

  SectorBottom out;
  out.ell = ell;
  out.constraint = (constraint == SectorConstraint::None) ? "none"
                   : (constraint == SectorConstraint::RadialPair)
                       ? "int f s^{n-1} dr = 0, f(R) = 0"
                       : "N-orthogonal to s_kappa";

  // Shooting refinement on the exact pencil EL system.  Skipped when the
  // pencil is near-degenerate (1 - mu small, far above any gap sector).
  double mu_shoot = mu_rich;
  RadialFunction refined;
  bool shot = false;
  if (mu_rich < 0.97) {
    const double scale = std::max(1.0, std::abs(mu_rich));
    if (constraint == SectorConstraint::RadialPair) {
      detail::RadialPairShooter coarse_cs{&ball, 384, opt.rk_tol};
      auto g = [&](double mu) { return coarse_cs(mu); };
      mu_shoot = detail::refine_root(g, mu_rich, scale);
      detail::RadialPairShooter cs{&ball, opt.out_nodes, opt.rk_tol};
      out.diag.shoot_residual = cs(mu_shoot, &refined);
    } else {
      // includes KernelOrthogonal: the constrained bottom is the second
      // unconstrained eigenvalue, already isolated by the FE initial guess.
      // The mismatch only involves endpoint values, so the root-find can run
      // on a coarse output grid.
      auto g = [&](double mu) { return shoot(ball, ell, mu, 128, opt.rk_tol).mismatch; };
      mu_shoot = detail::refine_root(g, mu_rich, scale);
      auto sr = shoot(ball, ell, mu_shoot, opt.out_nodes, opt.rk_tol);
      refined = sr.f;
      out.diag.shoot_residual = sr.mismatch;
    }
    shot = true;
  } else {
    // The infimum sits in the mu -> 1 cluster and is generally not attained
    // (discrete eigenvectors there are grid-frequency artifacts).  Return a
    // smooth constrained representative instead of the FE vector.
    out.argmin_attained = false;
    refined.ell = ell;
    refined.grid = cosine_grid(1e-6 * ball.radius, ball.radius, opt.out_nodes);
    refined.values.resize(refined.grid.size());
    refined.derivs.resize(refined.grid.size());
    const double R = ball.radius;
    if (constraint == SectorConstraint::RadialPair) {
      // combine two polynomials vanishing at R to kill the volume integral
      auto g1 = [&](double r) { const double s = r / R; return 1.0 - s * s; };
      auto g2 = [&](double r) { const double s = r / R; return s * s * (1.0 - s * s); };
      Eigen::ArrayXd w1(refined.grid.size()), w2(refined.grid.size());
      for (Eigen::Index i = 0; i < refined.grid.size(); ++i) {
        const double sn = std::pow(s_kappa(ball.kappa, refined.grid[i]), ball.n - 1);
        w1[i] = g1(refined.grid[i]) * sn;
        w2[i] = g2(refined.grid[i]) * sn;
      }
      const double c = integrate_samples(refined.grid, w1) / integrate_samples(refined.grid, w2);
      for (Eigen::Index i = 0; i < refined.grid.size(); ++i) {
        const double r = refined.grid[i], s = r / R;
        refined.values[i] = g1(r) - c * g2(r);
        refined.derivs[i] = (-2.0 * s - c * (2.0 * s - 4.0 * s * s * s)) / R;
      }
    } else if (constraint == SectorConstraint::KernelOrthogonal) {
      // s_kappa (r/R)^2 made N-orthogonal to s_kappa
      RadialFunction sk = refined, skq = refined;
      for (Eigen::Index i = 0; i < refined.grid.size(); ++i) {
        const double r = refined.grid[i], s = r / R;
        sk.values[i] = s_kappa(ball.kappa, r);
        sk.derivs[i] = s_kappa_prime(ball.kappa, r);
        skq.values[i] = sk.values[i] * s * s;
        skq.derivs[i] = sk.derivs[i] * s * s + sk.values[i] * 2.0 * s / R;
      }
      const double c = n_form_sector_bilinear(ball, ell, skq, sk) /
                       n_form_sector_bilinear(ball, ell, sk, sk);
      refined.values = skq.values - c * sk.values;
      refined.derivs = skq.derivs - c * sk.derivs;
    } else {
      for (Eigen::Index i = 0; i < refined.grid.size(); ++i) {
        const double r = refined.grid[i];
        refined.values[i] = std::pow(r / R, ell);
        refined.derivs[i] = ell * std::pow(r / R, ell - 1) / R;
      }
    }
  }

  // Normalize to N_l(f) = 1.
  const double nval = n_form_sector_bilinear(ball, ell, refined, refined);
  if (nval <= 0.0) throw TransportError("sector_bottom: refined eigenfunction has nonpositive N");
  const double sc = 1.0 / std::sqrt(nval);
  refined.values *= sc;
  refined.derivs *= sc;
  if (!shot) out.diag.shoot_residual = 0.0;

  out.value = mu_shoot;
  out.argmin = refined;
  out.diag.shoot_refined = shot;
  out.diag.fe_value = mu_h2;
  out.diag.fe_value_coarse = mu_h;
  out.diag.richardson = mu_rich;
  out.diag.shoot_value = mu_shoot;
  out.diag.shoot_fe_agreement = std::abs(mu_shoot - mu_rich);
  return out;
}

// ============================================================================
// Spectral gap
// ============================================================================

struct PerSectorReport {
  int ell = 0;
  double bottom = 0.0;
  std::string constraint;
  long long multiplicity = 0;
  SectorDiagnostics diag;
};

struct KernelResiduals {
  double shoot_mismatch = 0.0;      // l=1, mu=0 Robin mismatch
  double profile_deviation = 0.0;   // max |f - s_kappa| after scaling / max|s_kappa|
  double robin_beta_residual = 0.0; // beta - s'(R)/s(R)
  double ell1_bottom = 0.0;         // unconstrained l=1 bottom (within 1e-7 of 0)
};

struct SpectralReport {
  ModelBall ball;
  std::vector<PerSectorReport> per_sector;
  KernelResiduals kernel_residuals;
  double gap = 0.0;          // Lambda_T
  double floor_value = 0.0;  // min over constrained l=0, l=1-orth, l>=2 bottoms
  bool gap_positive = false;
  int l_max = 0;
  bool increasing_from_2 = true;
  bool lmax_largest = true;
};

// Kernel residual bundle: shoot the l=1 equation at mu = 0 and compare with
// s_kappa.
inline KernelResiduals kernel_residuals(const ModelBall& ball, const SpectralOptions& opt = {}) {
  KernelResiduals kr;
  auto sr = shoot(ball, 1, 0.0, opt.out_nodes, opt.rk_tol);
  kr.shoot_mismatch = sr.mismatch;
  Eigen::ArrayXd s_ref(sr.f.grid.size());
  for (Eigen::Index i = 0; i < sr.f.grid.size(); ++i)
    s_ref[i] = s_kappa(ball.kappa, sr.f.grid[i]);
  const auto last = sr.f.grid.size() - 1;
  const double scale = sr.f.values[last] / s_ref[last];
  kr.profile_deviation = (sr.f.values - scale * s_ref).abs().maxCoeff() /
                         (std::abs(scale) * s_ref.abs().maxCoeff());
  kr.robin_beta_residual = ball.robin_residual();
  return kr;
}

inline SpectralReport spectral_gap(const ModelBall& ball, const BridgeProfile& profile,
                                   int l_max, const SpectralOptions& opt_in = {}) {
  if (l_max < 3) throw DomainError("spectral_gap: l_max must be >= 3");
  SpectralOptions opt = opt_in;
  opt.l_max = l_max;

  SpectralReport rep;
  rep.ball = ball;
  rep.l_max = l_max;
  rep.kernel_residuals = kernel_residuals(ball, opt);

  // Unconstrained l=1 bottom: the kernel level, reported but excluded from
  // the gap.
  {
    auto sb = sector_bottom(ball, profile, 1, SectorConstraint::None, opt);
    rep.kernel_residuals.ell1_bottom = sb.value;
  }

  double gap = INFINITY;
  for (int ell = 0; ell <= l_max; ++ell) {
    auto sb = sector_bottom(ball, profile, ell, SectorConstraint::Auto, opt);
    PerSectorReport pr;
    pr.ell = ell;
    pr.bottom = sb.value;
    pr.constraint = sb.constraint;
    pr.multiplicity = harmonic_multiplicity(ball.n, ell);
    pr.diag = sb.diag;
    rep.per_sector.push_back(std::move(pr));
    if (sb.value < -1e-6)
      throw NegativityError("spectral_gap: sector bottom below -1e-6 contradicts the "
                            "nonnegativity of the second variation");
    gap = std::min(gap, sb.value);
  }

  for (std::size_t i = 0; i < rep.per_sector.size(); ++i) {
    if (rep.per_sector[i].ell >= 3 &&
        rep.per_sector[i].bottom <= rep.per_sector[i - 1].bottom)
      rep.increasing_from_2 = false;
  }
  for (const auto& pr : rep.per_sector)
    if (pr.ell != l_max && pr.bottom >= rep.per_sector.back().bottom)
      rep.lmax_largest = false;

  rep.gap = gap;
  rep.floor_value = gap;
  rep.gap_positive = gap > 0.0;
  return rep;
}

// ============================================================================
// Kernel fields
// ============================================================================

// The symmetry-generated Jacobi fields Z_0 = (n-2)/2 U + x . grad U and
// Z_i = d_i U, transported as phi_j = (Z_j / U) o F^{-1}.  Each is
// c_j s_kappa(r) omega_axis(j); this verifies that and extracts the c_j.
struct KernelFields {
  RadialFunction radial;             // the common profile (s_kappa on the sample grid)
  std::vector<int> labels;           // {0, 2, ..., n}
  std::vector<double> coefficients;  // c_j, fitted
  std::vector<double> expected_coefficients;  // closed-form values
  double max_deviation = 0.0;
  Eigen::MatrixXd gram;              // transported-Dirichlet inner products
  double gram_min_eig = 0.0;
  double gram_cond = 0.0;
  double h0_volume_residual = 0.0;
  double h0_boundary_residual = 0.0;
};

namespace detail {

inline double z_ratio(const BridgeProfile& p, int j, const Eigen::VectorXd& y) {
  const double y2 = y.squaredNorm();
  if (p.branch.tag == BranchTag::Spherical) {
    if (j == 0)
      return 0.5 * (p.n - 2.0) * (1.0 - y2 - 2.0 * p.t * y[0]) / (1.0 + y2);
    return -(p.n - 2.0) * y[j - 1] / (1.0 + y2);
  }
  if (j == 0)
    return -0.5 * (p.n - 2.0) * (y2 + 1.0 + 2.0 * p.t * y[0]) / (y2 - 1.0);
  return -(p.n - 2.0) * y[j - 1] / (y2 - 1.0);
}

}  // namespace detail

inline KernelFields kernel_fields(const ModelMap& map, int sample_nodes = 200) {
  const auto& p = map.profile();
  const auto& ball = map.ball();
  const int n = p.n;
  const double root_k = std::sqrt(std::abs(ball.kappa));
  const double frame = std::sqrt(std::abs(p.branch.eta() + p.t * p.t));

  KernelFields kf;
  kf.radial.ell = 1;
  kf.radial.grid = cosine_grid(1e-6 * ball.radius, ball.radius * (1.0 - 1e-9), sample_nodes);
  kf.radial.values.resize(kf.radial.grid.size());
  kf.radial.derivs.resize(kf.radial.grid.size());
  for (Eigen::Index i = 0; i < kf.radial.grid.size(); ++i) {
    kf.radial.values[i] = s_kappa(ball.kappa, kf.radial.grid[i]);
    kf.radial.derivs[i] = s_kappa_prime(ball.kappa, kf.radial.grid[i]);
  }

  // Expected coefficients from the closed-form reductions.
  kf.expected_coefficients.push_back(-0.5 * (n - 2.0) * frame * root_k);  // phi_0
  for (int i = 2; i <= n; ++i) kf.expected_coefficients.push_back(-0.5 * (n - 2.0) * root_k);

  const std::vector<double> u_samples{0.94, 0.62, -0.38, -0.86};
  kf.labels.push_back(0);
  for (int i = 2; i <= n; ++i) kf.labels.push_back(i);

  auto sample_point = [&](int label, double r, double u) {
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(n);
    if (label == 0) {
      omega[0] = u;
      omega[1] = std::sqrt(std::max(0.0, 1.0 - u * u));
    } else {
      omega[label - 1] = u;
      omega[0] = std::sqrt(std::max(0.0, 1.0 - u * u));
    }
    const Eigen::VectorXd y = map.from_model(r, omega);
    return detail::z_ratio(p, label, y);
  };

  double worst = 0.0;
  for (int label : kf.labels) {
    double num = 0.0, den = 0.0;
    for (double u : u_samples) {
      for (Eigen::Index i = 0; i < kf.radial.grid.size(); i += 7) {
        const double r = kf.radial.grid[i];
        const double basis = s_kappa(ball.kappa, r) * u;
        num += sample_point(label, r, u) * basis;
        den += basis * basis;
      }
    }
    const double c = num / den;
    kf.coefficients.push_back(c);
    double dev = 0.0, ref = 0.0;
    for (double u : u_samples) {
      for (Eigen::Index i = 0; i < kf.radial.grid.size(); i += 7) {
        const double r = kf.radial.grid[i];
        const double basis = s_kappa(ball.kappa, r) * u;
        dev = std::max(dev, std::abs(sample_point(label, r, u) - c * basis));
        ref = std::max(ref, std::abs(c * s_kappa(ball.kappa, r)));
      }
    }
    worst = std::max(worst, dev / ref);
    if (dev / ref > 1e-6)
      throw KernelMismatchError("kernel_fields: transported Jacobi field deviates from s_kappa");
  }
  kf.max_deviation = worst;

  // Gram matrix in the transported Dirichlet inner product.  Fields with
  // different harmonic axes are orthogonal by parity; diagonal entries are
  // c_j^2 (|S^{n-1}|/n) N_1(s_kappa).
  RadialFunction s_rf = kf.radial;
  const double n1 = n_form_sector_bilinear(ball, 1, s_rf, s_rf);
  const double ang = sphere_surface(n) / n;
  const auto k = static_cast<Eigen::Index>(kf.labels.size());
  kf.gram = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    kf.gram(j, j) = kf.coefficients[j] * kf.coefficients[j] * ang * n1;
  kf.gram_min_eig = kf.gram.diagonal().minCoeff();
  kf.gram_cond = kf.gram.diagonal().maxCoeff() / kf.gram_min_eig;
  if (!(kf.gram_min_eig > 0.0))
    throw KernelMismatchError("kernel_fields: Gram matrix not positive definite");

  // H_0 membership: both transported constraint integrals of phi_0 vanish.
  // Evaluated honestly through the chart by 2D (r, theta) quadrature, and
  // reported relative to the integrals of |phi_0|.
  {
    QuadratureSpec spec;
    spec.scheme = QuadScheme::GaussLegendre;
    spec.node_count = 256;
    auto field = [&](double r, double u) { return sample_point(0, r, u); };
    auto angular = [&](auto&& g) {
      return integrate([&](double th) { return g(std::cos(th)) * std::pow(std::sin(th), n - 2); },
                       0.0, M_PI, spec);
    };
    double vol = 0.0, vol_abs = 0.0;
    const double r_lo = 1e-6 * ball.radius, r_hi = ball.radius * (1.0 - 1e-9);
    vol = integrate([&](double r) {
      return std::pow(s_kappa(ball.kappa, r), n - 1) *
             angular([&](double u) { return field(r, u); });
    }, r_lo, r_hi, spec);
    vol_abs = integrate([&](double r) {
      return std::pow(s_kappa(ball.kappa, r), n - 1) *
             angular([&](double u) { return std::abs(field(r, u)); });
    }, r_lo, r_hi, spec);
    kf.h0_volume_residual = std::abs(vol) / vol_abs;
    const double bdry = angular([&](double u) { return field(r_hi, u); });
    const double bdry_abs = angular([&](double u) { return std::abs(field(r_hi, u)); });
    kf.h0_boundary_residual = std::abs(bdry) / bdry_abs;
  }

  return kf;
}

}  // namespace bridgelab
