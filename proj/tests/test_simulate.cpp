#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "scontract/cpg.hpp"
#include "scontract/simulate.hpp"
#include "test_systems.hpp"

namespace scontract {
namespace {

using testing::scalar;
using testing::scalar_map;
using testing::scalar_sde;

EnsembleConfig point_config(long n, double horizon, std::uint64_t seed, double a0 = 0,
                            double b0 = 0) {
  EnsembleConfig c;
  c.pair_count = n;
  c.horizon = horizon;
  c.master_seed = seed;
  c.initial = InitialCondition::point(scalar(a0), scalar(b0));
  return c;
}

TEST(StepDiscrete, DeterministicCases) {
  NoiseStream noise(1, 0, 0);
  EXPECT_EQ(step_discrete(scalar_map(0.0, 0.0), scalar(3.0), 0, noise)(0), 0.0);
  EXPECT_EQ(step_discrete(scalar_map(0.5, 0.0), scalar(2.0), 0, noise)(0), 1.0);
}

TEST(StepDiscrete, NoiseMoments) {
  NoiseStream noise(2, 0, 0);
  const auto sys = scalar_map(0.5, 1.0);
  const int n = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = step_discrete(sys, scalar(0.0), i, noise)(0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  EXPECT_LT(std::abs(mean), 0.02);
  EXPECT_NEAR(sum2 / n - mean * mean, 1.0, 0.05);
}

TEST(StepDiscrete, NonFiniteReported) {
  NoiseStream noise(1, 0, 0);
  EXPECT_THROW(step_discrete(scalar_map(1e300, 0.0), scalar(1e300), 0, noise), NonFiniteState);
}

TEST(DeriveStream, ReproducibleAndIndependent) {
  NoiseStream a = derive_stream(5, 3, 0);
  NoiseStream b = derive_stream(5, 3, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.standard_normal(), b.standard_normal());
  NoiseStream x = derive_stream(5, 0, 0);
  NoiseStream y = derive_stream(5, 0, 1);
  const int n = 100000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double p = x.standard_normal();
    const double q = y.standard_normal();
    sxy += p * q;
    sx += p;
    sy += q;
    sxx += p * p;
    syy += q * q;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  EXPECT_LT(std::abs(corr), 0.01);
}

TEST(DeriveStream, DistinctAcrossDomainsAndPairs) {
  std::set<double> first;
  for (std::uint64_t pair = 0; pair < 50; ++pair) {
    for (std::uint64_t member = 0; member < 2; ++member) {
      first.insert(derive_stream(9, pair, member).standard_normal());
    }
  }
  first.insert(NoiseStream(9, 0, 0, 1).standard_normal());
  EXPECT_EQ(first.size(), 101u);
}

TEST(IntegrateSde, ZeroDynamicsIsConstant) {
  NoiseStream noise(1, 0, 0);
  const auto path = integrate_sde(scalar_sde(0.0, 0.0), scalar(1.5), 0.0, 1.0, 0.1, noise);
  ASSERT_EQ(path.states.size(), 11u);
  for (const auto& x : path.states) EXPECT_EQ(x(0), 1.5);
  EXPECT_NEAR(path.times.back(), 1.0, 1e-15);
}

TEST(IntegrateSde, RejectsNonIntegerStepCount) {
  NoiseStream noise(1, 0, 0);
  EXPECT_THROW(integrate_sde(scalar_sde(0.0, 0.0), scalar(1.5), 0.0, 1.0, 0.3, noise),
               std::invalid_argument);
}

TEST(IntegrateSde, BrownianVariance) {
  const double sigma = 1.3;
  const int n = 10000;
  double sum2 = 0;
  for (int i = 0; i < n; ++i) {
    NoiseStream noise = derive_stream(4, i, 0);
    const auto p = integrate_sde(scalar_sde(0.0, sigma), scalar(0.0), 0.0, 2.0, 0.01, noise);
    sum2 += p.states.back()(0) * p.states.back()(0);
  }
  EXPECT_NEAR(sum2 / n, sigma * sigma * 2.0, 0.05 * sigma * sigma * 2.0);
}

TEST(IntegrateSde, StrongOrderOneForDeterministicDecay) {
  NoiseStream noise = NoiseStream::silent();
  double prev_err = 0;
  for (double h : {0.01, 0.005, 0.0025}) {
    const auto p = integrate_sde(scalar_sde(-1.0, 0.0), scalar(1.0), 0.0, 1.0, h, noise);
    const double err = std::abs(p.states.back()(0) - std::exp(-1.0));
    EXPECT_LE(err, 3 * h);
    if (prev_err > 0) {
      const double ratio = prev_err / err;
      EXPECT_GE(ratio, 1.7);
      EXPECT_LE(ratio, 2.3);
    }
    prev_err = err;
  }
}

TEST(RunHybrid, HandIteratedResets) {
  const auto h = testing::hybrid_linear(0.0, 0.0, 0.5, 0.0, 1.0);
  NoiseStream noise(1, 0, 0);
  const auto samples = run_hybrid(h, scalar(1.0), 3.0, 0.1, noise);
  ASSERT_EQ(samples.size(), 8u);
  const double expected_post[] = {0.5, 0.25, 0.125, 0.0625};
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(samples[2 * k].side, SampleSide::kPre);
    EXPECT_EQ(samples[2 * k + 1].side, SampleSide::kPost);
    EXPECT_NEAR(samples[2 * k].time, k, 1e-15);
    EXPECT_NEAR(samples[2 * k + 1].state(0), expected_post[k], 1e-15);
  }
}

TEST(RunHybrid, IdentityResetGivesPureSdePath) {
  const auto h = testing::hybrid_linear(-0.7, 0.0, 1.0, 0.0, 0.5);
  NoiseStream n1 = NoiseStream::silent();
  NoiseStream n2 = NoiseStream::silent();
  const auto samples = run_hybrid(h, scalar(2.0), 2.0, 0.01, n1, 3);
  const auto path = integrate_sde(h.continuous, scalar(2.0), 0.0, 2.0, 0.01, n2);
  for (const auto& s : samples) {
    const long j = std::lround(s.time / 0.01);
    EXPECT_NEAR(s.state(0), path.states[j](0), 1e-12);
  }
}

TEST(RunHybrid, GridHasPrePostAndInteriorSamples) {
  const auto h = testing::hybrid_linear(-1.0, 1.0, 0.5, 1.0, 0.5);
  NoiseStream noise(3, 0, 0);
  const auto samples = run_hybrid(h, scalar(0.0), 1.0, 0.01, noise, 4);
  // 3 resets (0, τ, 2τ) with pre+post, 4 interiors in each of 2 intervals.
  ASSERT_EQ(samples.size(), 3u * 2 + 2u * 4);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    EXPECT_GE(samples[i].time, samples[i - 1].time);
  }
}

TEST(PairEnsemble, NoiselessIdenticalPairsStayTogether) {
  auto c = point_config(50, 20, 1, 0.7, 0.7);
  const auto stats = run_pair_ensemble(scalar_map(0.9, 0.0), c, MetricSpec::identity(1));
  for (const auto& pt : stats.grid) EXPECT_EQ(pt.mean, 0.0);
}

TEST(PairEnsemble, OuAttainsStationaryVariance) {
  auto c = point_config(10000, 100, 11);
  const auto stats = run_pair_ensemble(scalar_map(0.5, 1.0), c, MetricSpec::identity(1));
  EXPECT_NEAR(stats.grid.back().mean, 8.0 / 3.0, 0.05 * 8.0 / 3.0);
  EXPECT_EQ(stats.grid.back().n_alive, 10000);
  EXPECT_NEAR(stats.grid.back().std_error, std::sqrt(2.0) * (8.0 / 3.0) / 100.0, 0.01);
}

TEST(PairEnsemble, BrownianPairVariance) {
  auto c = point_config(10000, 1.0, 12);
  c.sde_step = 0.01;
  c.record_stride = 10;
  const auto stats = run_pair_ensemble(scalar_sde(0.0, 1.0), c, MetricSpec::identity(1));
  EXPECT_NEAR(stats.grid.back().time, 1.0, 1e-12);
  EXPECT_NEAR(stats.grid.back().mean, 2.0, 0.1);
}

TEST(PairEnsemble, NoiseFreePartnerHalvesStationaryVariance) {
  auto c = point_config(10000, 60, 13);
  c.pairing = PairingMode::kNoisyVsNoiseFree;
  const auto stats = run_pair_ensemble(scalar_map(0.5, 1.0), c, MetricSpec::identity(1));
  EXPECT_NEAR(stats.grid.back().mean, 4.0 / 3.0, 0.05 * 4.0 / 3.0);
}

TEST(PairEnsemble, MetricWeightsDistance) {
  auto c = point_config(10, 5, 1, 1.0, 0.0);
  const auto sys = scalar_map(1.0, 0.0);
  const auto stats = run_pair_ensemble(sys, c, MetricSpec::constant(Matrix::Constant(1, 1, 9.0)));
  for (const auto& pt : stats.grid) EXPECT_NEAR(pt.mean, 9.0, 1e-15);
}

TEST(PairEnsemble, IndependentOfWorkerCount) {
  const auto h = testing::hybrid_linear(0.5, 1.0, 0.6, 0.5, 0.2);
  EnsembleConfig c;
  c.pair_count = 300;
  c.horizon = 2.0;
  c.sde_step = 0.01;
  c.master_seed = 77;
  c.interior_samples = 2;
  c.initial = InitialCondition::box(scalar(-1), scalar(1));
  c.workers = 1;
  const std::string one = run_pair_ensemble(h, c, MetricSpec::identity(1)).to_csv();
  c.workers = 4;
  const std::string four = run_pair_ensemble(h, c, MetricSpec::identity(1)).to_csv();
  EXPECT_EQ(one, four);
  c.master_seed = 78;
  EXPECT_NE(one, run_pair_ensemble(h, c, MetricSpec::identity(1)).to_csv());
}

TEST(PairEnsemble, CsvLayout) {
  auto c = point_config(4, 2, 1);
  const std::string csv = run_pair_ensemble(scalar_map(0.5, 1.0), c, MetricSpec::identity(1)).to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "time,side,mean_sq_dist,stderr,n_alive");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(PairEnsemble, DivergentPairsCountedNotDropped) {
  auto c = point_config(40, 10, 1, 1.0, -1.0);
  DiscreteMapSystem sys = scalar_map(1e120, 0.0);
  const auto stats = run_pair_ensemble(sys, c, MetricSpec::identity(1));
  EXPECT_EQ(stats.failures.size(), 40u);
  EXPECT_EQ(stats.grid[1].n_alive, 40);
  EXPECT_EQ(stats.grid.back().n_alive, 0);
  EXPECT_TRUE(std::isnan(stats.grid.back().mean));
  EXPECT_EQ(stats.failures.front().pair_index, 0);
}

TEST(PairEnsemble, ConfigValidation) {
  const auto h = testing::hybrid_linear(0.5, 1.0, 0.6, 0.5, 0.2);
  EnsembleConfig c;
  c.initial = InitialCondition::point(scalar(0), scalar(0));
  c.horizon = 1.0;
  c.sde_step = 0.03;
  EXPECT_THROW(validate_ensemble_config(h, c), std::invalid_argument);
  c.sde_step = 0.01;
  c.pair_count = 0;
  EXPECT_THROW(validate_ensemble_config(h, c), std::invalid_argument);
  c.pair_count = 1;
  c.horizon = 0.5;
  EXPECT_THROW(validate_ensemble_config(h, c), std::invalid_argument);
  c.horizon = 1.0;
  EXPECT_NO_THROW(validate_ensemble_config(h, c));
  c.initial = InitialCondition::point(testing::vec({0, 0}), scalar(0));
  EXPECT_THROW(validate_ensemble_config(h, c), std::invalid_argument);
}

// Bound verification harness on the linear hybrid systems of each
// contracting/neutral/bounded-expanding regime, both pairing modes.
TEST(BoundHarness, LinearHybridRegimesRespectBounds) {
  struct Case {
    double a;
    BoundTag tag;
  };
  for (const Case& cs : {Case{-1.0, BoundTag::kThm2}, Case{0.0, BoundTag::kThm3},
                         Case{1.0, BoundTag::kThm4Bounded}}) {
    for (auto pairing : {PairingMode::kTwoNoisy, PairingMode::kNoisyVsNoiseFree}) {
      const double rho = 0.5, s = 1.0, s_d = 1.0, tau = 0.5;
      const auto h = testing::hybrid_linear(cs.a, s, rho, s_d, tau);
      EnsembleConfig c;
      c.pair_count = 4000;
      c.horizon = 5.0;
      c.sde_step = 0.005;
      c.interior_samples = 3;
      c.master_seed = 21;
      c.pairing = pairing;
      c.initial = InitialCondition::point(scalar(3.0), scalar(-3.0));
      BoundReport r = hybrid_bound(rho * rho, -cs.a, s_d * s_d, s * s, tau, 36.0);
      if (pairing == PairingMode::kNoisyVsNoiseFree) r = apply_noisefree_corollary(r);
      ASSERT_EQ(r.tag, cs.tag);
      const auto stats = run_pair_ensemble(h, c, MetricSpec::identity(1));
      const auto check = check_against_bound(stats, r);
      EXPECT_TRUE(check.all_pass) << to_string(cs.tag) << " worst excess "
                                  << check.worst_excess_in_stderr;
    }
  }
}

TEST(BoundHarness, DetectsViolation) {
  auto c = point_config(2000, 30, 3);
  const auto stats = run_pair_ensemble(scalar_map(0.5, 1.0), c, MetricSpec::identity(1));
  // A bound computed for half the actual noise must be flagged.
  const auto check = check_against_bound(stats, discrete_ms_bound(0.25, 0.5, 0.0));
  EXPECT_FALSE(check.all_pass);
  EXPECT_GT(check.worst_excess_in_stderr, 3.0);
}

// Weak-error control at the CPG parameters: halving h with common random
// numbers moves the terminal mean of δ by less than its Monte Carlo
// standard error.
TEST(WeakError, CpgHalvingStepIsBelowMonteCarloError) {
  cpg::CPGParams p;
  const double T = 2.0;
  const long runs = 2000;
  const long sub_coarse = 100;
  const double h = p.tau / sub_coarse;
  const double sc = p.sigma_c / std::sqrt(2.0);
  double sum_c = 0, sum_f = 0, sum2_c = 0;
  for (long r = 0; r < runs; ++r) {
    NoiseStream init(5, r, 0, 1);
    NoiseStream noise = derive_stream(5, r, 0);
    cpg::CPGState coarse;
    for (auto& xi : coarse.x) {
      const double a = init.uniform(-1, 1);
      const double b = init.uniform(-1, 1);
      xi = {a, b};
    }
    cpg::CPGState fine = coarse;
    const long resets = std::lround(T / p.tau);
    for (long k = 0; k <= resets; ++k) {
      std::array<cpg::Vec2, 3> w;
      for (auto& wi : w) {
        const double a = noise.standard_normal();
        const double b = noise.standard_normal();
        wi = {a, b};
      }
      coarse = cpg::coupling_reset(coarse, p.gamma, p.sigma_d, w);
      fine = cpg::coupling_reset(fine, p.gamma, p.sigma_d, w);
      if (k == resets) break;
      for (long j = 0; j < sub_coarse; ++j) {
        std::array<cpg::Vec2, 3> dw_total{cpg::Vec2::Zero(), cpg::Vec2::Zero(), cpg::Vec2::Zero()};
        for (int half = 0; half < 2; ++half) {
          for (int i = 0; i < 3; ++i) {
            const double a = noise.standard_normal();
            const double b = noise.standard_normal();
            const cpg::Vec2 dw = std::sqrt(h / 2) * cpg::Vec2(a, b);
            fine.x[i] += cpg::hopf_drift(fine.x[i]) * (h / 2) + sc * dw;
            dw_total[i] += dw;
          }
        }
        for (int i = 0; i < 3; ++i) coarse.x[i] += cpg::hopf_drift(coarse.x[i]) * h + sc * dw_total[i];
      }
    }
    const double dc = cpg::phase_locking_delta(coarse);
    const double df = cpg::phase_locking_delta(fine);
    sum_c += dc;
    sum2_c += dc * dc;
    sum_f += df;
  }
  const double mean_c = sum_c / runs;
  const double se = std::sqrt((sum2_c / runs - mean_c * mean_c) / (runs - 1));
  EXPECT_LT(std::abs(mean_c - sum_f / runs), se);
}

}  // namespace
}  // namespace scontract
