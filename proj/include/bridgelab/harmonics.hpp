#pragma once

// Spherical-harmonic sector bookkeeping on S^{n-1}: multiplicities, the
// angular eigenvalue l(l+n-2), and L^2-normalized zonal harmonics (Gegenbauer
// polynomials in the cosine of the polar angle).

#include <cmath>
#include <vector>

#include "bridgelab/errors.hpp"
#include "bridgelab/quadrature.hpp"

namespace bridgelab {

// Surface measure |S^{d-1}| of the unit sphere in R^d.
inline double sphere_surface(int d) {
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

// d_l = (2l+n-2)(l+n-3)! / (l! (n-2)!), the dimension of degree-l harmonics
// on S^{n-1}.
inline long long harmonic_multiplicity(int n, int ell) {
  if (n < 3 || ell < 0) throw DomainError("harmonic_multiplicity: need n >= 3, ell >= 0");
  if (ell == 0) return 1;
  double binom = 1.0;  // binom(l+n-2, l)
  for (int j = 1; j <= ell; ++j) binom *= (n - 2.0 + j) / j;
  double d = (2.0 * ell + n - 2.0) / (ell + n - 2.0) * binom;
  return static_cast<long long>(std::llround(d));
}

struct Sector {
  int n = 0;
  int ell = 0;
  double angular_eigenvalue = 0.0;  // l(l+n-2)
  long long multiplicity = 0;       // d_l

  static Sector make(int n, int ell) {
    return Sector{n, ell, static_cast<double>(ell) * (ell + n - 2),
                  harmonic_multiplicity(n, ell)};
  }
};

namespace detail {

// Gegenbauer C_l^lambda(u) by the standard three-term recurrence.
inline double gegenbauer(int ell, double lambda, double u) {
  if (ell == 0) return 1.0;
  double c0 = 1.0, c1 = 2.0 * lambda * u;
  if (ell == 1) return c1;
  for (int k = 2; k <= ell; ++k) {
    double c2 = (2.0 * u * (k + lambda - 1.0) * c1 - (k + 2.0 * lambda - 2.0) * c0) / k;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

}  // namespace detail

// Zonal harmonic of degree l on S^{n-1} as a function of u = cos(theta),
// normalized so that its L^2(S^{n-1}) norm is 1.
class ZonalHarmonic {
public:
  ZonalHarmonic(int n, int ell) : n_(n), ell_(ell), lambda_(0.5 * (n - 2)) {
    if (n < 3 || ell < 0) throw DomainError("ZonalHarmonic: need n >= 3, ell >= 0");
    // ||C_l||^2 over S^{n-1} via the polar-angle substitution u = cos(phi);
    // the integrand is smooth so plain Gauss-Legendre is enough.
    QuadratureSpec spec;
    spec.node_count = 512;
    spec.scheme = QuadScheme::GaussLegendre;
    double norm2 = sphere_surface(n - 1) *
                   integrate(
                       [&](double phi) {
                         double g = detail::gegenbauer(ell_, lambda_, std::cos(phi));
                         return g * g * std::pow(std::sin(phi), n - 2);
                       },
                       0.0, M_PI, spec);
    scale_ = 1.0 / std::sqrt(norm2);
  }

  int degree() const { return ell_; }

  double operator()(double u) const { return scale_ * detail::gegenbauer(ell_, lambda_, u); }

  // d/du; uses d/du C_l^lambda = 2 lambda C_{l-1}^{lambda+1}.
  double deriv(double u) const {
    if (ell_ == 0) return 0.0;
    return scale_ * 2.0 * lambda_ * detail::gegenbauer(ell_ - 1, lambda_ + 1.0, u);
  }

  // |grad_{S^{n-1}} Z|^2 at polar cosine u equals (1-u^2) Z'(u)^2.
  double tangential_grad_sq(double u) const {
    double d = deriv(u);
    return (1.0 - u * u) * d * d;
  }

private:
  int n_;
  int ell_;
  double lambda_;
  double scale_ = 1.0;
};

}  // namespace bridgelab
