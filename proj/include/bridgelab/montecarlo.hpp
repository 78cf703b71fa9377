#pragma once

// Importance-sampled Monte Carlo oracle for the constraint integrals: the
// brute-force, quadrature-independent check.  Proposals are coordinate-wise
// Cauchy (half-Cauchy along the axis direction, anchored at the domain wall),
// which dominates the algebraic tails of every integrand used here.
//
// Reproducibility: engines are std::mt19937_64 seeded per chunk through a
// splitmix64 scramble, and all variates come from explicit inverse-CDF
// transforms, so a fixed seed gives bit-identical estimates.

#include <cmath>
#include <cstdint>
#include <random>

#include "bridgelab/errors.hpp"
#include "bridgelab/geometry.hpp"

namespace bridgelab {

enum class McDomain { Bulk, Boundary };

struct McResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double cauchy(std::mt19937_64& eng) {
  return std::tan(M_PI * (uniform01(eng) - 0.5));
}

}  // namespace detail

// Monte Carlo estimate of the bulk integral int base^{-q(n-2)/2} dx over the
// half-space (domain Bulk), or of the boundary integral
// int (a^2+|x'|^2)^{-(n-1)} dx' (domain Boundary, q ignored).
inline McResult mc_oracle(int n, Branch branch, double t, double q, long long samples,
                          std::uint64_t seed, McDomain domain = McDomain::Bulk) {
  if (n < 3 || samples <= 0) throw DomainError("mc_oracle: need n >= 3 and samples > 0");
  if (branch.tag == BranchTag::Hyperbolic && t >= -1.0)
    throw DomainError("mc_oracle: hyperbolic branch requires t < -1");
  const double eta = branch.eta();
  const double m = 0.5 * q * (n - 2);
  if (domain == McDomain::Bulk && m <= 0.5 * n)
    throw IntegralError("mc_oracle: divergent bulk exponent");
  const double scale = std::sqrt(eta + t * t);
  const double log_pi_s = std::log(M_PI * scale);

  double sum = 0.0, sum_sq = 0.0;
  const long long chunk = 1 << 20;
  std::uint64_t seq = seed;
  for (long long done = 0; done < samples;) {
    const long long batch = std::min(chunk, samples - done);
    std::mt19937_64 eng(detail::splitmix64(seq));
    for (long long i = 0; i < batch; ++i) {
      double log_p = 0.0;
      double g = 0.0;
      if (domain == McDomain::Bulk) {
        // y1 = -t + scale * |Cauchy|, y'_i = scale * Cauchy.
        const double c1 = detail::cauchy(eng);
        const double y1 = -t + scale * std::abs(c1);
        log_p = std::log(2.0) - log_pi_s - std::log1p(c1 * c1);
        double y2 = y1 * y1;
        for (int j = 1; j < n; ++j) {
          const double cj = detail::cauchy(eng);
          const double yj = scale * cj;
          y2 += yj * yj;
          log_p += -log_pi_s - std::log1p(cj * cj);
        }
        g = std::exp(-m * std::log(eta + y2) - log_p);
      } else {
        double r2 = 0.0;
        for (int j = 0; j < n - 1; ++j) {
          const double cj = detail::cauchy(eng);
          const double xj = scale * cj;
          r2 += xj * xj;
          log_p += -log_pi_s - std::log1p(cj * cj);
        }
        g = std::exp(-(n - 1.0) * std::log(eta + t * t + r2) - log_p);
      }
      sum += g;
      sum_sq += g * g;
    }
    done += batch;
  }

  McResult r;
  r.samples = samples;
  r.seed = seed;
  r.estimate = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - r.estimate * r.estimate);
  r.standard_error = std::sqrt(var / samples);
  return r;
}

}  // namespace bridgelab
