#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bridgelab/model_map.hpp"
#include "bridgelab/robin.hpp"
#include "bridgelab/stability.hpp"

using namespace bridgelab;

namespace {

struct Lab {
  ModelMap map;
  LabQuad quad;
  explicit Lab(const BridgeProfile& p) : map(p), quad(map.ball()) {}
};

Lab& spherical_lab() {
  static Lab lab(solve_profile(3, 0.5 * escobar_threshold(3)));
  return lab;
}

// 2D axisymmetric half-space quadrature of |grad psi|^2 with finite-difference
// gradients: the independent oracle for the transported N-form.
template <class F>
double halfspace_dirichlet_fd(const F& psi, int n, double t) {
  QuadratureSpec spec;
  spec.node_count = 312;
  const double area = sphere_surface(n - 1);
  const double h = 1e-5;
  auto grad2 = [&](double x1, double rho) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    x[0] = x1;
    x[1] = rho;
    auto shift = [&](int i, double d) {
      Eigen::VectorXd z = x;
      z[i] += d;
      return psi(z);
    };
    // x1-derivative: one-sided second-order stencil near the wall
    double d1;
    if (x1 < 1.5 * h) {
      d1 = (-3.0 * psi(x) + 4.0 * shift(0, h) - shift(0, 2.0 * h)) / (2.0 * h);
    } else {
      d1 = (shift(0, h) - shift(0, -h)) / (2.0 * h);
    }
    const double d2 = (shift(1, h) - shift(1, -h)) / (2.0 * h);
    // tangential directions beyond the meridian plane contribute zero for
    // zonal-about-e1 data
    return d1 * d1 + d2 * d2;
  };
  return area * integrate_half_line_split(
                    [&](double x1) {
                      return integrate_half_line_split(
                          [&](double rho) {
                            return grad2(x1, rho) * std::pow(rho, n - 2);
                          },
                          1e-7, {1.0, 3.0 + std::abs(t)}, spec);
                    },
                    1e-7, {1.0, 3.0 + std::abs(t)}, spec);
}

}  // namespace

TEST(GroupAction, IdentityAndCompositionLaw) {
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  auto U = [&](const Eigen::VectorXd& x) { return profile_eval(p, x).value; };

  const auto id = GroupElement::identity(p.n);
  auto acted = act(id, U, p.n);
  Eigen::VectorXd x(3);
  x << 0.7, -0.4, 1.1;
  EXPECT_EQ(acted(x), U(x));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int k = 0; k < 20; ++k) {
    GroupElement g1{std::exp(u(rng)), Eigen::Vector2d(u(rng), u(rng))};
    GroupElement g2{std::exp(u(rng)), Eigen::Vector2d(u(rng), u(rng))};
    auto lhs = act(g1, act(g2, U, p.n), p.n);
    auto rhs = act(compose(g1, g2), U, p.n);
    Eigen::VectorXd z(3);
    z << std::abs(u(rng)) + 0.05, u(rng), u(rng);
    EXPECT_NEAR(lhs(z), rhs(z), 1e-13 * std::abs(rhs(z)));
  }
}

TEST(GroupAction, ActedBubbleMatchesPointwiseAction) {
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  auto U = [&](const Eigen::VectorXd& x) { return profile_eval(p, x).value; };
  GroupElement g{1.37, Eigen::Vector2d(0.3, -0.8)};
  const Bubble vb = act(g, p);
  auto fn = act(g, U, p.n);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd x(3);
    x << std::abs(u(rng)), u(rng), u(rng);
    EXPECT_NEAR(vb.eval(x), fn(x), 1e-14 * std::abs(fn(x)));
  }
}

TEST(GroupAction, NormsInvariantUnderAction) {
  // Evaluate the acted bubble pointwise on quadrature grids adapted to its
  // own center; all three norms agree with the base profile's to 1e-9.
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  const auto ex = p.exponents();
  QuadratureSpec spec;
  const double area = sphere_surface(p.n - 1);

  for (auto [a, z2] : {std::pair{1.0, 0.0}, {1.45, 0.7}, {0.6, -1.2}}) {
    GroupElement g{a, Eigen::Vector2d(z2, 0.0)};
    const Bubble vb = act(g, p);
    // bulk norm: axisymmetric about the shifted center (x1, |x' - z|)
    auto bulk_rho = [&](double x1) {
      return integrate_half_line_split(
          [&](double rho) {
            Eigen::VectorXd x(3);
            x << x1, vb.z[0] + rho, vb.z[1];
            // rho is the tangential distance from the acted center
            return std::pow(vb.eval(x), ex.two_star) * std::pow(rho, p.n - 2);
          },
          1e-9, {1.0 / a, 10.0 / a}, spec);
    };
    const double hump = std::max(0.0, p.t / a);
    const double bulk = area * integrate_half_line_split(
                                   [&](double x1) { return bulk_rho(x1); }, 0.0,
                                   {0.5 * hump, hump + 2.0 / a, hump + 20.0 / a}, spec);
    EXPECT_NEAR(std::pow(bulk, 1.0 / ex.two_star), 1.0, 1e-9) << "a=" << a;

    const double bdry =
        area * integrate_half_line_split(
                   [&](double rho) {
                     Eigen::VectorXd x(3);
                     x << 0.0, vb.z[0] + rho, vb.z[1];
                     return std::pow(vb.eval(x), ex.two_sharp) * std::pow(rho, p.n - 2);
                   },
                   1e-9, {1.0 / a, 10.0 / a}, spec);
    EXPECT_NEAR(std::pow(bdry, 1.0 / ex.two_sharp) / p.T, 1.0, 1e-9) << "a=" << a;
  }
}

TEST(Lift, TangentFieldFromKernelProfile) {
  // f = s_kappa, l = 1 lifts into the tangent space: its transported energy
  // matches the kernel-field normalization, and the linearized constraints
  // hold to quadrature tolerance.
  const auto& lab = spherical_lab();
  const auto& ball = lab.map.ball();
  RadialFunction sk;
  sk.ell = 1;
  sk.grid = cosine_grid(1e-6 * ball.radius, ball.radius, 800);
  sk.values.resize(sk.grid.size());
  sk.derivs.resize(sk.grid.size());
  for (Eigen::Index i = 0; i < sk.grid.size(); ++i) {
    sk.values[i] = s_kappa(ball.kappa, sk.grid[i]);
    sk.derivs[i] = s_kappa_prime(ball.kappa, sk.grid[i]);
  }
  auto pert = make_perturbation(lab.map, sk, 1.0);
  Competitor c(lab.map, pert);

  // linearized constraints: int_B phi dV and int_dB phi dS vanish for l >= 1
  ZonalHarmonic Z(3, 1);
  const double vol = lab.quad.volume([&](double r, double u) { return sk(r) * Z(u); });
  const double bdry = lab.quad.boundary([&](double u) { return sk(ball.radius) * Z(u); });
  const double scale = lab.quad.volume([&](double r, double u) { return std::abs(sk(r) * Z(u)); });
  EXPECT_LT(std::abs(vol) / scale, 1e-12);
  EXPECT_LT(std::abs(bdry), 1e-12 * scale);
}

TEST(Lift, NFormMatchesDirectHalfspaceQuadrature) {
  // The transport identity oracle: ||grad(U f Z)||^2 over the half-space by
  // finite-difference 2D quadrature vs the radial N-form.
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  const auto& ball = lab.map.ball();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 2; ++rep) {
    const int ell = 1 + rep;
    RadialFunction f;
    f.ell = ell;
    f.grid = cosine_grid(1e-6 * ball.radius, ball.radius, 600);
    f.values.resize(f.grid.size());
    f.derivs.resize(f.grid.size());
    const double c1 = u(rng), c2 = u(rng);
    const double R = ball.radius;
    for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
      const double r = f.grid[i], s = r / R;
      f.values[i] = std::pow(r, ell) * (1.0 + c1 * s + c2 * s * s);
      f.derivs[i] = ell * std::pow(r, ell - 1) * (1.0 + c1 * s + c2 * s * s) +
                    std::pow(r, ell) * (c1 + 2.0 * c2 * s) / R;
    }
    const double nform = n_form_sector(ball, p, ell, f);

    ZonalHarmonic Z(p.n, ell);
    auto psi = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = x;
      y[0] -= p.t;
      const auto mp = lab.map.to_model(y);
      return profile_eval(p, x).value * f(mp.r) * Z(mp.omega[0]);
    };
    const double direct = halfspace_dirichlet_fd(psi, p.n, p.t);
    EXPECT_NEAR(direct / nform, 1.0, 1e-5) << "ell=" << ell;
  }
}

TEST(Competitor, HalfspaceEvalConsistentWithChart) {
  // u = U * ghat evaluated at half-space points agrees with the model-side
  // data through both chart directions.
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  auto sb = sector_bottom(lab.map.ball(), p, 2);
  auto pert = make_perturbation(lab.map, sb.argmin, 3e-2);
  Competitor c(lab.map, pert);
  for (double r : {0.2 * lab.map.ball().radius, 0.7 * lab.map.ball().radius}) {
    for (double u : {-0.8, 0.1, 0.9}) {
      auto [y1, rho] = lab.map.from_model_zonal(r, u);
      auto [r2, u2] = lab.map.to_model_zonal(y1, rho);
      EXPECT_NEAR(r2, r, 1e-9 * lab.map.ball().radius);
      EXPECT_NEAR(u2, u, 1e-9);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(p.n);
      x[0] = y1 + p.t;
      x[1] = rho;
      const double expected = profile_eval(p, x).value * c.ghat(r, u);
      EXPECT_NEAR(c.eval(x), expected, 1e-10 * std::abs(expected));
    }
  }
}

TEST(Project, EpsilonZeroIsExact) {
  const auto& lab = spherical_lab();
  const auto& ball = lab.map.ball();
  auto sb = sector_bottom(ball, lab.map.profile(), 2);
  auto pert = make_perturbation(lab.map, sb.argmin, 0.0);
  ProjectionInfo info;
  auto c = project_to_constraints(lab.map, pert, 0.0, lab.quad, &info);
  EXPECT_EQ(c.corr_a(), 0.0);
  EXPECT_EQ(c.corr_b(), 0.0);
  EXPECT_EQ(info.newton_iterations, 0);
}

TEST(Project, ConstraintsMetAndDefectQuadratic) {
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  const auto ex = p.exponents();
  auto sb = sector_bottom(lab.map.ball(), p, 2);
  auto pert = make_perturbation(lab.map, sb.argmin, 1.0);

  double prev_defect = 0.0, prev_eps = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    ProjectionInfo info;
    auto c = project_to_constraints(lab.map, pert, eps, lab.quad, &info);
    const auto v = competitor_constraints(c, lab.quad);
    EXPECT_LT(std::abs(v.bulk - 1.0), 1e-11);
    EXPECT_LT(std::abs(v.trace - std::pow(p.T, ex.two_sharp)),
              1e-11 * std::pow(p.T, ex.two_sharp));
    const double defect = std::abs(info.defect_bulk) + std::abs(info.defect_trace);
    if (prev_defect > 0.0) {
      const double slope = std::log(prev_defect / defect) / std::log(prev_eps / eps);
      EXPECT_NEAR(slope, 2.0, 0.05);
    }
    prev_defect = defect;
    prev_eps = eps;
  }
}

TEST(Deficit, MatchesEnergyDifferenceRoute) {
  // the cancellation-free deficit agrees with E(ghat) - Phi^2 where the
  // latter is numerically meaningful
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  auto sb = sector_bottom(lab.map.ball(), p, 2);
  auto pert = make_perturbation(lab.map, sb.argmin, 1.0);
  auto c = project_to_constraints(lab.map, pert, 0.1, lab.quad);
  const double direct = competitor_energy(c, lab.quad) - p.phi * p.phi;
  EXPECT_NEAR(deficit(c, lab.quad), direct, 1e-9 * p.phi * p.phi);
}

TEST(Deficit, ZeroAtMinimizerAndUnderAction) {
  const auto& lab = spherical_lab();
  auto pert = make_perturbation(lab.map, RadialFunction{}, 0.0);
  // empty radial => ghat = 1 => u = U
  Competitor c(lab.map, [&] {
    Perturbation q = pert;
    q.radial.ell = 0;
    q.radial.grid = cosine_grid(1e-6, 1.0, 8);
    q.radial.values = Eigen::ArrayXd::Zero(9);
    q.radial.derivs = Eigen::ArrayXd::Zero(9);
    q.amplitude = 0.0;
    return q;
  }());
  EXPECT_NEAR(deficit(c, lab.quad), 0.0, 1e-10);
}

TEST(NearestPoint, MinimizerRecoversIdentity) {
  const auto& lab = spherical_lab();
  Perturbation q;
  q.sector = Sector::make(3, 0);
  q.radial.ell = 0;
  q.radial.grid = cosine_grid(1e-6, 1.0, 8);
  q.radial.values = Eigen::ArrayXd::Zero(9);
  q.radial.derivs = Eigen::ArrayXd::Zero(9);
  q.amplitude = 0.0;
  Competitor c(lab.map, q);
  const auto np = nearest_point(c, lab.quad);
  EXPECT_NEAR(np.g.scale, 1.0, 1e-8);
  EXPECT_LT(np.distance, 1e-6);
}

TEST(NearestPoint, RecoversGroupElement) {
  // u = act(g0, U): the off-axis search recovers g0 and d ~ 0.
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  GroupElement g0{1.12, Eigen::Vector2d(0.18, 0.0)};
  const Bubble vb = act(g0, p);
  const LabQuad3 q3(lab.map.ball());
  auto h = bubble_model_field(lab.map, vb);
  const auto np = nearest_point_offaxis(lab.map, h, p.phi * p.phi, q3);
  EXPECT_NEAR(np.g.scale, g0.scale, 2e-4);
  EXPECT_NEAR(np.g.shift[0], g0.shift[0], 2e-4);
  EXPECT_LT(np.distance, 2e-3 * p.phi);
}

TEST(StabilitySweep, KernelDirectionIsFlat) {
  // f = s_kappa, l = 1 is tangent to the minimizer manifold: deficit = o(eps^2)
  // and d/eps -> 0 after the dilation search.
  const auto& lab = spherical_lab();
  const auto& ball = lab.map.ball();
  RadialFunction sk;
  sk.ell = 1;
  sk.grid = cosine_grid(1e-6 * ball.radius, ball.radius, 800);
  sk.values.resize(sk.grid.size());
  sk.derivs.resize(sk.grid.size());
  for (Eigen::Index i = 0; i < sk.grid.size(); ++i) {
    sk.values[i] = s_kappa(ball.kappa, sk.grid[i]);
    sk.derivs[i] = s_kappa_prime(ball.kappa, sk.grid[i]);
  }
  const double nrm = std::sqrt(n_form_sector(ball, lab.map.profile(), 1, sk));
  sk.values /= nrm;
  sk.derivs /= nrm;
  auto pert = make_perturbation(lab.map, sk, 1.0);

  std::vector<double> epses{4e-2, 2e-2, 1e-2, 5e-3};
  std::vector<double> defs, dists;
  for (double eps : epses) {
    auto u = project_to_constraints(lab.map, pert, eps, lab.quad);
    defs.push_back(deficit(u, lab.quad));
    dists.push_back(nearest_point(u, lab.quad).distance);
  }
  // log-log slope of the deficit > 2.5 (kernel annihilates the Hessian)
  const double slope = std::log(defs.front() / defs.back()) / std::log(epses.front() / epses.back());
  EXPECT_GT(slope, 2.5);
  // distance shrinks faster than eps
  EXPECT_LT(dists.back() / epses.back(), 0.5 * dists.front() / epses.front());
}

TEST(StabilitySweep, RatioMatchesHalfQuadraticForm) {
  const auto& lab = spherical_lab();
  const auto& p = lab.map.profile();
  const auto& ball = lab.map.ball();
  const auto gap_rep = spectral_gap(ball, p, 6);

  // The deficit expands as delta = Q(psi) + o (the energy difference equals
  // the full Lagrangian Hessian), so the measured limit is 2 * q_half = Q/N.
  for (int ell : {0, 2}) {
    auto sb = sector_bottom(ball, p, ell);
    auto pert = make_perturbation(lab.map, sb.argmin, 1.0);
    auto rep = stability_sweep(lab.map, pert, {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3},
                               0.5 * gap_rep.gap, lab.quad);
    EXPECT_NEAR(rep.fitted_coefficient / (2.0 * rep.q_half), 1.0, 1e-2) << "ell=" << ell;
    EXPECT_GE(rep.fitted_coefficient, gap_rep.gap * 0.99);
    EXPECT_NEAR(rep.q_half, 0.5 * sb.value, 1e-6 * std::abs(sb.value)) << "ell=" << ell;
    EXPECT_NEAR(rep.correction_slope, 2.0, 0.1);
  }

  // the gap-achieving direction attains Lambda_T
  int gap_ell = 0;
  double best = INFINITY;
  for (const auto& s : gap_rep.per_sector)
    if (s.bottom < best) {
      best = s.bottom;
      gap_ell = s.ell;
    }
  auto sb = sector_bottom(ball, p, gap_ell);
  auto pert = make_perturbation(lab.map, sb.argmin, 1.0);
  auto rep = stability_sweep(lab.map, pert, {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3},
                             0.5 * gap_rep.gap, lab.quad);
  EXPECT_NEAR(rep.fitted_coefficient / gap_rep.gap, 1.0, 1e-2);
}

TEST(StabilitySweep, InputValidation) {
  const auto& lab = spherical_lab();
  auto sb = sector_bottom(lab.map.ball(), lab.map.profile(), 2);
  auto pert = make_perturbation(lab.map, sb.argmin, 1.0);
  EXPECT_THROW(stability_sweep(lab.map, pert, {1e-1, 1e-2}, 0.1, lab.quad), DomainError);
  EXPECT_THROW(stability_sweep(lab.map, pert, {1e-3, 1e-2, 1e-1, 1.0}, 0.1, lab.quad),
               DomainError);
}
