#include <gtest/gtest.h>

#include <cmath>

#include "pbc/oracle.hpp"
#include "test_support.hpp"

using namespace pbc;
using pbc::testing::naive_poisson;

TEST(PoissonPmf, KnownValues) {
  EXPECT_NEAR(poisson_pmf(0, 1.0), std::exp(-1.0), 1e-16);
  EXPECT_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_EQ(poisson_pmf(3, 0.0), 0.0);
  for (int k = 0; k < 30; ++k) {
    EXPECT_NEAR(poisson_pmf(static_cast<std::size_t>(k), 7.5), naive_poisson(k, 7.5),
                1e-13 * naive_poisson(k, 7.5));
  }
}

TEST(PoissonPmf, Normalised) {
  KahanSum<double> s;
  for (std::size_t k = 0; k <= 200; ++k) s += poisson_pmf(k, 10.0);
  EXPECT_NEAR(s.value(), 1.0, 1e-12);
}

TEST(PoissonPmf, LargeMeanStaysFinite) {
  // e^-1000 underflows; the log-space form does not.
  const double p = poisson_pmf(1000, 1000.0);
  EXPECT_GT(p, 0.0);
  EXPECT_NEAR(p, 1.0 / std::sqrt(2.0 * std::numbers::pi * 1000.0), 2e-5);
}

TEST(PoissonPmf, NegativeMeanRejected) {
  EXPECT_THROW(poisson_pmf(0, -1.0), PreconditionError);
}

TEST(SeriesPremium, ZeroIntensityGivesZero) {
  EXPECT_EQ(gaussian_series_premium(10.0, 3.0, 0.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(gaussian_series_premium(10.0, 3.0, 2.0, 0.0, 5.0), 0.0);
}

TEST(SeriesPremium, ConstantJumpIsPoissonCall) {
  EXPECT_NEAR(gaussian_series_premium(1.0, 0.0, 1.0, 1.0, 1.0), std::exp(-1.0), 3e-12);
  const auto constant = JumpDistribution::constant(2.5);
  for (double k : {0.0, 3.0, 10.0, 17.5}) {
    EXPECT_NEAR(series_premium(constant, 1.5, 2.0, k),
                pbc::testing::poisson_lattice_call(2.5, 3.0, k), 1e-12 * (7.5 + k + 1.0));
  }
}

TEST(SeriesPremium, MatchesFrozenHighPrecisionValue) {
  // Mixture density integrated at 30 digits: mu 10, sd 3, lambda*T 4, K 40.
  constexpr double golden = 8.324988558044277653597396723;
  EXPECT_NEAR(gaussian_series_premium(10.0, 3.0, 4.0, 1.0, 40.0), golden, 1e-12 * 81.0);
  EXPECT_NEAR(gaussian_series_premium(10.0, 3.0, 2.0, 2.0, 40.0), golden, 1e-12 * 81.0);
  EXPECT_NEAR(gaussian_series_premium(10.0, 3.0, 4.0, 1.0, 40.0, {400, 1e-30}), golden, 1e-14);
}

TEST(SeriesPremium, MatchesBruteForceQuadrature) {
  struct Case {
    double mu, sd, mean_count, strike;
  } cases[] = {{10.0, 3.0, 0.5, 5.0}, {10.0, 3.0, 5.0, 50.0}, {10.0, 6.0, 2.0, 12.0},
               {4.0, 1.0, 10.0, 30.0}};
  for (const auto& c : cases) {
    const double series = gaussian_series_premium(c.mu, c.sd, c.mean_count, 1.0, c.strike);
    const double brute = pbc::testing::quadrature_call(c.mu, c.sd, c.mean_count, c.strike);
    EXPECT_NEAR(series, brute, 1e-8 * std::max(1.0, brute))
        << c.mu << " " << c.sd << " " << c.mean_count << " " << c.strike;
  }
}

TEST(SeriesPremium, NonIncreasingAndConvexInStrike) {
  double prev2 = NAN, prev = NAN;
  for (double k = -20.0; k <= 120.0; k += 2.5) {
    const double c = gaussian_series_premium(10.0, 3.0, 5.0, 1.0, k);
    if (!std::isnan(prev)) {
      EXPECT_LE(c, prev + 1e-12);
    }
    if (!std::isnan(prev2)) {
      EXPECT_GE(c - 2.0 * prev + prev2, -1e-10);
    }
    prev2 = prev;
    prev = c;
  }
}

TEST(SeriesPremium, NegativeStrikeAddsLinearly) {
  // Below every atom and bulk of mass: C = E[X] - K.
  EXPECT_NEAR(gaussian_series_premium(10.0, 1.0, 2.0, 1.0, -5.0), 20.0 + 5.0, 1e-9);
}

TEST(SeriesPremium, IncreasesWithJumpDispersion) {
  double prev = gaussian_series_premium(10.0, 0.0, 3.0, 1.0, 30.0);
  for (double sd : {1.0, 2.0, 4.0, 8.0}) {
    const double c = gaussian_series_premium(10.0, sd, 3.0, 1.0, 30.0);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(SeriesPremium, CallPutParity) {
  for (double k : {0.0, 25.0, 50.0, 90.0}) {
    const double call = gaussian_series_premium(10.0, 3.0, 5.0, 1.0, k);
    const double put = gaussian_series_put(10.0, 3.0, 5.0, 1.0, k);
    EXPECT_NEAR(call - put, 50.0 - k, 1e-8 * std::max(50.0, k));
  }
}

TEST(SeriesPremium, TruncationErrorWithinTolerance) {
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    for (double k : {0.0, 80.0, 200.0}) {
      const double a = gaussian_series_premium(10.0, 3.0, 8.0, 1.0, k, {200, tol});
      const double b = gaussian_series_premium(10.0, 3.0, 8.0, 1.0, k, {400, 1e-200});
      EXPECT_NEAR(a, b, tol * (8.0 * 10.0 + k + 1.0)) << tol << " " << k;
    }
  }
}

TEST(SeriesPremium, RaisesWhenTermsRunOut) {
  const SeriesControl few{5, 1e-12};
  try {
    gaussian_series_premium(10.0, 3.0, 20.0, 1.0, 100.0, few);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.achieved_bound(), 1e-12);
  }
}

TEST(SeriesPremium, LargeIntensityWithEnoughTerms) {
  const SeriesControl ctrl{1000, 1e-12};
  const double c = gaussian_series_premium(1.0, 0.0, 500.0, 1.0, 500.0, ctrl);
  // Poisson(500) call at its mean ~ sd / sqrt(2 pi)
  EXPECT_NEAR(c, std::sqrt(500.0) / std::sqrt(2.0 * std::numbers::pi), 0.05);
  EXPECT_THROW(gaussian_series_premium(1.0, 0.0, 500.0, 1.0, 500.0), TruncationError);
}

TEST(SeriesPremium, UnsupportedLaws) {
  EXPECT_THROW(series_premium(JumpDistribution::weibull_log(2.0, 2.2), 1.0, 1.0, 1.0),
               UnsupportedError);
  EXPECT_THROW(series_premium(JumpDistribution::empirical({1.0, 2.0}), 1.0, 1.0, 1.0),
               UnsupportedError);
}

TEST(CompoundDensity, ContinuousPartIntegratesToOneMinusAtom) {
  const auto dist = JumpDistribution::gaussian(10.0, 3.0);
  const auto law = compound_law(dist, 1.0, 1.0);
  EXPECT_NEAR(law.zero_atom, std::exp(-1.0), 1e-16);
  const double integral =
      pbc::testing::simpson([&](double x) { return law.density(x); }, -60.0, 200.0, 20000);
  EXPECT_NEAR(integral, 1.0 - std::exp(-1.0), 1e-8);
  EXPECT_NEAR(law.continuous_mass(), 1.0 - std::exp(-1.0), 1e-12);
}

TEST(CompoundDensity, MatchesExplicitMixture) {
  const auto dist = JumpDistribution::gaussian(10.0, 3.0);
  for (double x : {-2.0, 5.0, 10.0, 23.0, 41.0}) {
    EXPECT_NEAR(compound_density(x, dist, 4.0, 1.0),
                pbc::testing::mixture_density(x, 10.0, 3.0, 4.0), 1e-14);
  }
}

TEST(CompoundDensity, ConstantJumpIsLattice) {
  const auto law = compound_law(JumpDistribution::constant(2.0), 3.0, 1.0);
  EXPECT_EQ(law.continuous_mass(), 0.0);
  EXPECT_EQ(law.density(4.0), 0.0);
  const auto atoms = law.atoms();
  ASSERT_GE(atoms.size(), 5u);
  for (std::size_t m = 0; m < 5; ++m) {
    EXPECT_EQ(atoms[m].x, 2.0 * static_cast<double>(m));
    EXPECT_NEAR(atoms[m].mass, naive_poisson(static_cast<int>(m), 3.0), 1e-14);
  }
}

TEST(CompoundDensity, VanishingIntensityLeavesOnlyAtom) {
  const auto law = compound_law(JumpDistribution::gaussian(10.0, 3.0), 1e-9, 1.0);
  EXPECT_NEAR(law.zero_atom, 1.0, 1e-8);
  EXPECT_LT(law.continuous_mass(), 1e-8);
}

TEST(CompoundDensity, UnsupportedLaws) {
  EXPECT_THROW(compound_law(JumpDistribution::weibull_log(2.0, 2.2), 1.0, 1.0), UnsupportedError);
}
