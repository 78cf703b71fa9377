#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bridgelab/montecarlo.hpp"
#include "bridgelab/profile.hpp"

using namespace bridgelab;

TEST(McOracle, AgreesWithQuadratureOnRandomPairs) {
  // 6 random (branch, t) pairs, bulk and boundary, 3-sigma agreement.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const long long samples = 400000;  // acceptance runs the full 1e7
  for (int k = 0; k < 6; ++k) {
    const bool spherical = (k % 2 == 0);
    const Branch branch = spherical ? Branch::spherical() : Branch::hyperbolic();
    const double t = spherical ? (4.0 * u01(rng) - 2.0) : (-1.2 - 3.0 * u01(rng));
    const int n = 3 + (k % 3);
    const auto ex = Exponents::of(n);

    const double bulk = bulk_integral(n, branch, t, ex.two_star);
    const auto mb = mc_oracle(n, branch, t, ex.two_star, samples, 77 + k, McDomain::Bulk);
    EXPECT_LT(std::abs(mb.estimate - bulk), 3.0 * mb.standard_error)
        << "bulk n=" << n << " t=" << t;

    const double bdry = boundary_integral(n, branch, t);
    const auto md = mc_oracle(n, branch, t, ex.two_sharp, samples, 177 + k, McDomain::Boundary);
    EXPECT_LT(std::abs(md.estimate - bdry), 3.0 * md.standard_error)
        << "boundary n=" << n << " t=" << t;
  }
}

TEST(McOracle, HyperbolicPrintedCase) {
  const auto md = mc_oracle(3, Branch::hyperbolic(), -2.0, Exponents::of(3).two_sharp, 300000,
                            41, McDomain::Boundary);
  const double exact = boundary_integral(3, Branch::hyperbolic(), -2.0);
  EXPECT_LT(std::abs(md.estimate - exact), 3.0 * md.standard_error);
}

TEST(McOracle, StandardErrorScaling) {
  const auto a = mc_oracle(3, Branch::spherical(), 0.5, 6.0, 100000, 5);
  const auto b = mc_oracle(3, Branch::spherical(), 0.5, 6.0, 400000, 5);
  // quadrupling the samples halves the standard error (within MC noise)
  EXPECT_NEAR(a.standard_error / b.standard_error, 2.0, 0.35);
}

TEST(McOracle, DeterministicGivenSeed) {
  const auto a = mc_oracle(4, Branch::hyperbolic(), -1.7, 4.0, 50000, 123);
  const auto b = mc_oracle(4, Branch::hyperbolic(), -1.7, 4.0, 50000, 123);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standard_error, b.standard_error);
  const auto c = mc_oracle(4, Branch::hyperbolic(), -1.7, 4.0, 50000, 124);
  EXPECT_NE(a.estimate, c.estimate);
}

TEST(McOracle, InputGuards) {
  EXPECT_THROW(mc_oracle(3, Branch::hyperbolic(), -0.5, 6.0, 100, 1), DomainError);
  EXPECT_THROW(mc_oracle(3, Branch::spherical(), 0.0, 1.0, 100, 1), IntegralError);
}
