#pragma once

// 1D quadrature used by every integral oracle in the lab: tanh-sinh
// (double-exponential) rules for finite intervals, an exp-sinh rule for
// half-lines with algebraic decay, and composite Gauss-Legendre as the
// alternative scheme.  All rules are deterministic functions of the spec.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <mutex>
#include <map>
#include <vector>

#include "bridgelab/errors.hpp"

namespace bridgelab {

enum class QuadScheme { TanhSinh, GaussLegendre };

struct QuadratureSpec {
  int node_count = 1024;
  QuadScheme scheme = QuadScheme::TanhSinh;
  double tail_cutoff = 1e16;  // half-line truncation distance above the lower limit
  double tol = 1e-14;

  void validate() const {
    if (node_count < 16) throw DomainError("QuadratureSpec: node_count must be >= 16");
    if (tol < 1e-14) throw DomainError("QuadratureSpec: tol must be >= 1e-14");
    if (tail_cutoff <= 0.0) throw DomainError("QuadratureSpec: tail_cutoff must be positive");
  }
};

namespace detail {

// Nodes/weights of the m-point Gauss-Legendre rule on [-1, 1], cached by order.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_rule(int m) {
  static std::mutex mtx;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  std::vector<double> x(m), w(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Chebyshev-based initial guess, then Newton on P_m.
    double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return cache.emplace(m, std::make_pair(std::move(x), std::move(w))).first->second;
}

}  // namespace detail

// Integral over the finite interval [a, b].
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (!(b >= a)) throw DomainError("integrate: requires b >= a");
  if (a == b) return 0.0;

  if (spec.scheme == QuadScheme::GaussLegendre) {
    const int order = 32;
    int panels = std::max(1, spec.node_count / order);
    const auto& [x, w] = detail::gauss_legendre_rule(order);
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      double pa = a + (b - a) * p / panels;
      double pb = a + (b - a) * (p + 1) / panels;
      double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
      double acc = 0.0;
      for (int i = 0; i < order; ++i) acc += w[i] * f(mid + half * x[i]);
      total += half * acc;
    }
    return total;
  }

  // tanh-sinh: x = mid + half*tanh((pi/2) sinh t), trapezoid in t.  The
  // range +-4.3 keeps the truncated tail below 1e-16 even for integrable
  // endpoint singularities (the weight*f product decays like e^{-s} there).
  const double t_max = 4.3;
  const int n = spec.node_count | 1;  // odd count keeps the midpoint node
  const double h = 2.0 * t_max / (n - 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = -t_max + i * h;
    const double s = M_PI_2 * std::sinh(t);
    const double c = std::cosh(s);
    const double wgt = M_PI_2 * std::cosh(t) / (c * c);
    if (wgt < 1e-300) continue;
    // abscissa as a stable offset from the nearer endpoint:
    // (1 - |tanh s|)/2 = em/(1+em) with em = exp(-2|s|)
    const double em = std::exp(-2.0 * std::abs(s));
    const double frac = em / (1.0 + em);
    const double x = (t >= 0.0) ? b - (b - a) * frac : a + (b - a) * frac;
    if (x <= a || x >= b) continue;  // offset below representable resolution
    total += wgt * f(x);
  }
  return total * 0.5 * (b - a) * h;
}

// Integral over [a, b] split at the interior breakpoints, so that an
// integrand whose variation sits at a known scale is resolved even when the
// interval is much longer than that scale.
template <class F>
double integrate_split(F&& f, double a, double b, std::initializer_list<double> breaks,
                       const QuadratureSpec& spec = {}) {
  double total = 0.0, lo = a;
  for (double c : breaks) {
    if (c > lo && c < b) {
      total += integrate(f, lo, c, spec);
      lo = c;
    }
  }
  return total + integrate(f, lo, b, spec);
}

// Integral over [a, infinity) for integrands with algebraic (or faster) decay.
template <class F>
double integrate_half_line(F&& f, double a, const QuadratureSpec& spec = {}) {
  spec.validate();

  if (spec.scheme == QuadScheme::GaussLegendre) {
    // Geometric panels a+[0,1], a+[1,10], ... out to the tail cutoff.
    std::vector<double> edges{0.0, 1.0};
    while (edges.back() < spec.tail_cutoff) edges.push_back(edges.back() * 10.0);
    edges.back() = spec.tail_cutoff;
    int per_panel = std::max<int>(16, spec.node_count / static_cast<int>(edges.size() - 1));
    const auto& [x, w] = detail::gauss_legendre_rule(per_panel);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      double pa = a + edges[p], pb = a + edges[p + 1];
      double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
      double acc = 0.0;
      for (int i = 0; i < per_panel; ++i) acc += w[i] * f(mid + half * x[i]);
      total += half * acc;
    }
    return total;
  }

  // exp-sinh: x = a + exp((pi/2) sinh t).  The weight near the lower end
  // decays only like exp(-(pi/2) sinh t), so the truncation must go out to
  // 4.3 to drop below 1e-16.
  const double t_lo = 4.3;
  const double t_hi = std::asinh(std::log(std::max(spec.tail_cutoff, 10.0)) * M_2_PI);
  const int n = spec.node_count | 1;
  const double h = (t_hi + t_lo) / (n - 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = -t_lo + i * h;
    double e = std::exp(M_PI_2 * std::sinh(t));
    double wgt = M_PI_2 * std::cosh(t) * e;
    if (!(wgt > 1e-300) || !std::isfinite(e)) continue;
    total += wgt * f(a + e);
  }
  return total * h;
}

// Half-line integral split at breakpoints; the unbounded tail starts at the
// last breakpoint above a (or at a itself).
template <class F>
double integrate_half_line_split(F&& f, double a, std::initializer_list<double> breaks,
                                 const QuadratureSpec& spec = {}) {
  double total = 0.0, lo = a;
  for (double c : breaks) {
    if (c > lo) {
      total += integrate(f, lo, c, spec);
      lo = c;
    }
  }
  return total + integrate_half_line(f, lo, spec);
}

}  // namespace bridgelab
