#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scontract/bounds.hpp"

namespace scontract {
namespace {

// Exact E(a−b)² for a scalar linear hybrid pair (drift −λx, diffusion √C_c,
// reset √β x + √C_d w) with independent noises: the second moment obeys
// u⁺ = βu⁻ + 2C_d at resets and u' = −2λu + 2C_c in between. `noise_scale`
// is 2 for two noisy members and 1 for noisy vs noise-free.
struct LinearMoment {
  double beta, lambda, c_d, c_c, tau, e0;
  double noise_scale = 2.0;

  double flow(double u, double s) const {
    if (lambda == 0.0) return u + noise_scale * c_c * s;
    const double g = std::exp(-2.0 * lambda * s);
    return g * u + noise_scale * c_c / (2.0 * lambda) * (1.0 - g);
  }
  // Value at t = kτ + s; at s = 0 `pre` selects the value before the reset.
  double at(long k, double s, bool pre) const {
    double u = e0;  // 0⁻
    for (long j = 0; j <= k; ++j) {
      if (j == k && s == 0.0 && pre) return u;
      u = beta * u + noise_scale * c_d;
      if (j == k) return flow(u, s);
      u = flow(u, tau);
    }
    return u;
  }
};

// Regime oracle written directly from the sign/threshold rule.
BoundTag oracle_regime(double beta, double lambda, double tau) {
  if (lambda > 0) return BoundTag::kThm2;
  if (lambda == 0) return BoundTag::kThm3;
  const double threshold = std::exp(-2.0 * std::abs(lambda) * tau);
  if (std::abs(beta - threshold) <= 1e-12 * threshold) return BoundTag::kThm4LinearGrowth;
  return beta < threshold ? BoundTag::kThm4Bounded : BoundTag::kThm4Unbounded;
}

TEST(DiscreteDistance, Examples) {
  const auto a = discrete_distance_bound(0.25, 0.0, 1.0);
  EXPECT_EQ(a.tag, BoundTag::kThm1Distance);
  EXPECT_EQ(a.asymptotic_bound, 0.0);
  for (long k = 0; k < 10; ++k) EXPECT_NEAR(a.at_step(k), std::pow(0.5, k), 1e-15);
  EXPECT_NEAR(discrete_distance_bound(0.25, 1.0, 0.0).asymptotic_bound, 4.0, 1e-15);
  EXPECT_THROW(discrete_distance_bound(1.0, 1.0, 0.0), BetaOutOfRange);
  EXPECT_THROW(discrete_distance_bound(-0.1, 1.0, 0.0), BetaOutOfRange);
  EXPECT_NO_THROW(discrete_distance_bound(0.0, 1.0, 0.0));
}

TEST(DiscreteMeanSquare, Examples) {
  const auto r = discrete_ms_bound(0.25, 1.0, 0.0);
  EXPECT_EQ(r.tag, BoundTag::kThm1MeanSquare);
  EXPECT_NEAR(r.asymptotic_bound, 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.transient_rate_per_step, 0.25, 1e-15);
  EXPECT_NEAR(discrete_ms_bound(0.52, 2e-4, 0.0).asymptotic_bound, 8.333333333333333e-4, 1e-15);
  EXPECT_EQ(discrete_ms_bound(0.3, 0.0, 5.0).asymptotic_bound, 0.0);
  EXPECT_THROW(discrete_ms_bound(1.0, 1.0, 0.0), BetaOutOfRange);
  EXPECT_THROW(discrete_ms_bound(0.5, -1.0, 0.0), BoundRangeError);
}

TEST(DiscreteMeanSquare, AsymptoteIsFixedPointOfMomentRecursion) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double beta = 0.98 * u01(rng);
    const double c = 3.0 * u01(rng);
    double u = 10.0 * u01(rng);
    const auto r = discrete_ms_bound(beta, c, u);
    for (long k = 0; k < 60; ++k) {
      EXPECT_LE(u, r.at_step(k) * (1 + 1e-12) + 1e-300);
      u = beta * u + 2.0 * c;
    }
    double fixed = 0.0;
    for (int i = 0; i < 5000; ++i) fixed = beta * fixed + 2.0 * c;
    EXPECT_NEAR(r.asymptotic_bound, fixed, 1e-12 * std::max(1.0, fixed));
  }
}

TEST(DiscreteMeanSquare, PointMassRefinement) {
  const auto plain = discrete_ms_bound(0.25, 1.0, 10.0, false);
  const auto refined = discrete_ms_bound(0.25, 1.0, 10.0, true);
  EXPECT_NEAR(refined.at_step(1), 8.0 / 3.0 + 0.25 * (10.0 - 8.0 / 3.0), 1e-14);
  EXPECT_LT(refined.at_step(3), plain.at_step(3));
  EXPECT_NEAR(discrete_ms_bound(0.25, 1.0, 1.0, true).at_step(2), 8.0 / 3.0, 1e-15);
}

TEST(HybridContracting, Examples) {
  const auto r = hybrid_bound_contracting(0.25, 1.0, 1.0, 1.0, 1.0, 0.0);
  EXPECT_EQ(r.tag, BoundTag::kThm2);
  EXPECT_NEAR(r.transient_rate_per_step, 0.25 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(r.transient_rate_per_step, 0.033834, 1e-6);
  EXPECT_NEAR(r.asymptotic_bound, 4.019, 1e-3);
  EXPECT_EQ(hybrid_bound_contracting(0.25, 1.0, 0.0, 0.0, 1.0, 0.0).asymptotic_bound, 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto x = hybrid_bound_contracting(0.999 * u01(rng), 1e-3 + 5 * u01(rng), u01(rng),
                                            u01(rng), 1e-3 + u01(rng), 0.0);
    EXPECT_TRUE(std::isfinite(x.asymptotic_bound));
  }
  EXPECT_THROW(hybrid_bound_contracting(0.25, -1.0, 1, 1, 1, 0), BoundRangeError);
  EXPECT_THROW(hybrid_bound_contracting(0.25, 1.0, 1, 1, 0.0, 0), BoundRangeError);
}

TEST(HybridNeutral, Examples) {
  const auto r = hybrid_bound_neutral(0.5, 1.0, 1.0, 1.0, 0.0);
  EXPECT_EQ(r.tag, BoundTag::kThm3);
  EXPECT_NEAR(r.asymptotic_bound, 10.0, 1e-13);
  EXPECT_NEAR(r.transient_rate_per_step, 0.5, 1e-15);
  EXPECT_EQ(hybrid_bound_neutral(0.5, 0.0, 0.0, 1.0, 0.0).asymptotic_bound, 0.0);
  EXPECT_NEAR(hybrid_bound_neutral(0.5, 1.0, 1.0, 1e-9, 0.0).asymptotic_bound, 2.0 / 0.25, 1e-6);
}

TEST(HybridNeutral, PostResetConstantAgainstExactMoments) {
  // β=0.25, τ=0.5, C_d=C_c=1: stationary u(kτ⁺)=3, u(kτ⁻)=4, C₂≈3.889.
  const auto r = hybrid_bound_neutral(0.25, 1.0, 1.0, 0.5, 0.0);
  EXPECT_NEAR(r.asymptotic_bound, 2.1875 / 0.5625, 1e-13);
  const LinearMoment m{0.25, 0.0, 1.0, 1.0, 0.5, 0.0};
  EXPECT_NEAR(m.at(200, 0.0, false), 3.0, 1e-12);
  EXPECT_NEAR(m.at(200, 0.0, true), 4.0, 1e-12);
  EXPECT_GE(r.asymptotic_bound, m.at(200, 0.0, false));
  // The stated constant alone does not cover the pre-reset value; the
  // reported trajectory does.
  EXPECT_LT(r.asymptotic_bound, m.at(200, 0.0, true));
  EXPECT_GE(r.at_time(100.0, Side::kLeft), m.at(200, 0.0, true));
  EXPECT_NEAR(r.sup_bound, r.asymptotic_bound + 2.0 * 0.5, 1e-13);
}

TEST(HybridExpanding, Examples) {
  const auto r = hybrid_bound_expanding(0.25, -1.0, 1.0, 1.0, 0.5, 0.0);
  EXPECT_EQ(r.tag, BoundTag::kThm4Bounded);
  EXPECT_NEAR(r.growth_factor, 0.25 * std::exp(1.0), 1e-15);
  EXPECT_NEAR(r.growth_factor, 0.67957, 1e-5);
  EXPECT_NEAR(r.asymptotic_bound, 13.16, 1e-2);
  EXPECT_EQ(hybrid_bound_expanding(0.9, -1.0, 1.0, 1.0, 1.0, 0.0).tag, BoundTag::kThm4Unbounded);
  EXPECT_FALSE(hybrid_bound_expanding(0.9, -1.0, 1.0, 1.0, 1.0, 0.0).is_bounded());
  EXPECT_TRUE(std::isinf(hybrid_bound_expanding(0.9, -1.0, 1.0, 1.0, 1.0, 0.0).asymptotic_bound));
  const double edge = std::exp(-2.0 * 1.0 * 0.5);
  EXPECT_EQ(hybrid_bound_expanding(edge, -1.0, 1.0, 1.0, 0.5, 0.0).tag, BoundTag::kThm4LinearGrowth);
  EXPECT_THROW(hybrid_bound_expanding(0.25, 1.0, 1, 1, 0.5, 0), BoundRangeError);
}

TEST(HybridExpanding, NearBoundaryWarning) {
  const double edge = std::exp(-1.0);
  EXPECT_FALSE(hybrid_bound_expanding(edge * (1 + 1e-10), -1.0, 1, 1, 0.5, 0).warnings.empty());
  EXPECT_TRUE(hybrid_bound_expanding(0.25, -1.0, 1, 1, 0.5, 0).warnings.empty());
}

TEST(HybridExpanding, StationaryEnvelope) {
  // a=+1, τ=0.5, β=0.25, C_d=C_c=1: exact u⁺≈7.59, u⁻≈22.33.
  const auto r = hybrid_bound_expanding(0.25, -1.0, 1.0, 1.0, 0.5, 0.0);
  const LinearMoment m{0.25, -1.0, 1.0, 1.0, 0.5, 0.0};
  EXPECT_NEAR(m.at(400, 0.0, false), 7.59, 1e-2);
  EXPECT_NEAR(m.at(400, 0.0, true), 22.33, 1e-2);
  EXPECT_GE(r.asymptotic_bound, m.at(400, 0.0, false));
  EXPECT_GE(r.at_time(200.0, Side::kLeft), m.at(400, 0.0, true));
  EXPECT_NEAR(r.sup_bound, std::exp(1.0) * r.asymptotic_bound + (std::exp(1.0) - 1.0), 1e-12);
}

// Every hybrid bound trajectory dominates the exact second moment of the
// linear pair that attains the hypotheses, in every regime and at every
// pre-reset, post-reset and interior time.
TEST(HybridBounds, DominateExactLinearMoments) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double beta = 0.05 + 0.9 * u01(rng);
    const int regime = trial % 3;
    const double lambda = regime == 0 ? 0.1 + 2 * u01(rng) : regime == 1 ? 0.0 : -(0.05 + u01(rng));
    const double tau = 0.05 + u01(rng);
    const double c_d = u01(rng);
    const double c_c = u01(rng);
    const double e0 = 20.0 * u01(rng);
    for (bool noise_free : {false, true}) {
      BoundReport r = hybrid_bound(beta, lambda, c_d, c_c, tau, e0);
      if (noise_free) r = apply_noisefree_corollary(r);
      const LinearMoment m{beta, lambda, c_d, c_c, tau, e0, noise_free ? 1.0 : 2.0};
      EXPECT_EQ(r.tag, oracle_regime(beta, lambda, tau));
      for (long k = 0; k < 12; ++k) {
        for (double frac : {0.0, 0.25, 0.5, 0.999}) {
          const double s = frac * tau;
          const double t = k * tau + s;
          if (frac == 0.0) {
            EXPECT_GE(r.at_time(t, Side::kLeft) * (1 + 1e-12), m.at(k, 0.0, true)) << trial;
            EXPECT_GE(r.at_time(t, Side::kRight) * (1 + 1e-12), m.at(k, 0.0, false)) << trial;
          } else {
            EXPECT_GE(r.at_time(t, Side::kRight) * (1 + 1e-12), m.at(k, s, false)) << trial;
          }
        }
      }
    }
  }
}

TEST(HybridBounds, LimitEqualsAsymptote) {
  const auto d = discrete_ms_bound(0.3, 1.0, 50.0);
  EXPECT_NEAR(d.at_step(2000), d.asymptotic_bound, 1e-12);
  const auto c = hybrid_bound_contracting(0.3, 1.0, 1.0, 1.0, 0.5, 50.0);
  EXPECT_NEAR(c.at_time(500.0, Side::kRight), c.asymptotic_bound, 1e-12);
  const auto n = hybrid_bound_neutral(0.3, 1.0, 1.0, 0.5, 50.0);
  EXPECT_NEAR(n.at_time(500.0, Side::kRight), n.asymptotic_bound, 1e-12);
  const auto e = hybrid_bound_expanding(0.3, -0.5, 1.0, 1.0, 0.5, 50.0);
  EXPECT_NEAR(e.at_time(2000.0, Side::kRight), e.asymptotic_bound, 1e-12);
}

TEST(HybridBounds, NonIncreasingWhenStartingAboveAsymptote) {
  const auto d = discrete_ms_bound(0.6, 1.0, 100.0);
  for (long k = 0; k < 50; ++k) EXPECT_LE(d.at_step(k + 1), d.at_step(k));
  const auto c = hybrid_bound_contracting(0.6, 0.7, 1.0, 1.0, 0.3, 100.0);
  for (int i = 0; i < 300; ++i) {
    EXPECT_LE(c.at_time((i + 1) * 0.01, Side::kRight), c.at_time(i * 0.01, Side::kRight) + 1e-12);
  }
  for (auto r : {hybrid_bound_neutral(0.6, 1.0, 1.0, 0.3, 100.0),
                 hybrid_bound_expanding(0.3, -0.5, 1.0, 1.0, 0.3, 100.0)}) {
    for (long k = 0; k < 40; ++k) {
      EXPECT_LE(r.at_time((k + 1) * 0.3, Side::kRight), r.at_time(k * 0.3, Side::kRight) + 1e-12);
    }
  }
}

TEST(Monotonicity, ConstantsIncreaseWithDwellTime) {
  for (double beta : {0.1, 0.5, 0.9}) {
    double prev2 = -1, prev3 = -1;
    for (int i = 1; i <= 100; ++i) {
      const double tau = 0.01 * i;
      const double c2 = hybrid_bound_neutral(beta, 1.0, 1.0, tau, 0).asymptotic_bound;
      EXPECT_GT(c2, prev2);
      prev2 = c2;
      // Stay inside the bounded regime: β e^{2|λ|τ} < 1.
      const double lam = -0.9 * std::log(1.0 / beta) / 2.0;
      const double c3 = hybrid_bound_expanding(beta, lam, 1.0, 1.0, tau, 0).asymptotic_bound;
      EXPECT_GT(c3, prev3);
      prev3 = c3;
    }
  }
}

TEST(NoiseFreePairing, HalvesNoiseConstants) {
  EXPECT_NEAR(apply_noisefree_corollary(discrete_ms_bound(0.25, 1.0, 0)).asymptotic_bound, 4.0 / 3.0,
              1e-15);
  EXPECT_NEAR(apply_noisefree_corollary(discrete_distance_bound(0.25, 1.0, 0)).asymptotic_bound,
              2.0, 1e-15);
  EXPECT_EQ(apply_noisefree_corollary(discrete_ms_bound(0.25, 0.0, 0)).asymptotic_bound, 0.0);
  const auto r = apply_noisefree_corollary(hybrid_bound_contracting(0.3, 1, 1, 1, 0.5, 0));
  EXPECT_TRUE(r.noise_free);
  EXPECT_EQ(r.tag, BoundTag::kThm2);
  EXPECT_NEAR(r.asymptotic_bound, hybrid_bound_contracting(0.3, 1, 0.5, 0.5, 0.5, 0).asymptotic_bound,
              1e-14);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double beta = 0.9 * u01(rng);
    const double c = 0.01 + u01(rng);
    for (const auto& base : {discrete_ms_bound(beta, c, 0), discrete_distance_bound(beta, c, 0),
                             hybrid_bound(beta, 0.5 - u01(rng), c, c, 0.2, 0)}) {
      if (!base.is_bounded()) continue;
      EXPECT_LT(apply_noisefree_corollary(base).asymptotic_bound, base.asymptotic_bound);
    }
  }
}

TEST(ClassifyRegime, Examples) {
  EXPECT_EQ(classify_regime(0.5, 1.0, 0.1), BoundTag::kThm2);
  EXPECT_EQ(classify_regime(0.5, 0.0, 0.1), BoundTag::kThm3);
  EXPECT_EQ(classify_regime(0.52, -1.0, 0.1), BoundTag::kThm4Bounded);
  EXPECT_EQ(classify_regime(0.9, -1.0, 1.0), BoundTag::kThm4Unbounded);
}

TEST(ClassifyRegime, AgreesWithOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double beta = u01(rng) * 0.999;
    const double tau = 0.01 + 2 * u01(rng);
    double lambda = 4 * u01(rng) - 2;
    if (i % 10 == 0) lambda = 0.0;
    if (i % 10 == 1) lambda = -std::log(1.0 / beta) / (2 * tau);  // boundary
    EXPECT_EQ(classify_regime(beta, lambda, tau), oracle_regime(beta, lambda, tau))
        << beta << " " << lambda << " " << tau;
  }
}

TEST(BoundTag, StringRoundTrip) {
  for (auto tag : {BoundTag::kThm1Distance, BoundTag::kThm1MeanSquare, BoundTag::kThm2,
                   BoundTag::kThm3, BoundTag::kThm4Bounded, BoundTag::kThm4LinearGrowth,
                   BoundTag::kThm4Unbounded, BoundTag::kCorollaryNoiseFree}) {
    EXPECT_EQ(bound_tag_from_string(to_string(tag)), tag);
  }
  EXPECT_EQ(to_string(BoundTag::kThm4LinearGrowth), "thm4-linear-growth");
  EXPECT_THROW(bound_tag_from_string("thm5"), std::invalid_argument);
}

}  // namespace
}  // namespace scontract
