#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "betaconst/constancy_test.hpp"
#include "betaconst/distributions.hpp"
#include "betaconst/errors.hpp"
#include "betaconst/sim.hpp"
#include "betaconst/stats.hpp"
#include "oracle/brute_force.hpp"
#include "oracle/instances.hpp"

using namespace betaconst;

namespace {

IncrementSet all_kept(std::vector<double> dx, std::vector<double> dy) {
  const int n = static_cast<int>(dx.size());
  TruncationSpec none;
  none.mode = NoTruncation{};
  return truncate(dx, dy, none, n);
}

TruncationSpec fixed_half() {
  TruncationSpec s;
  s.mode = FixedThreshold{0.5, 0.5};
  s.varpi = 0.49;
  return s;
}

SimConfig flat_config(double beta, int days, int n) {
  SimConfig c;
  c.days = days;
  c.steps_per_day = n;
  c.vol_x = CirParams{0.03, 1.0, 0.0};
  c.vol_y = CirParams{0.03, 1.0, 0.0};
  c.beta = ConstantBeta{beta};
  return c;
}

// T_2 = -0.5: block 1 has V1 = 0.04, V2 = 1 (V = 0.04), block 2 has V = 0.02,
// both with C = 0 (b = 0).
IncrementSet minus_half_day() {
  const double c2 = std::sqrt(0.125);
  return all_kept({0.1, 0.1, 0.1, 0.1}, {0.5, -0.5, c2, -c2});
}

// Magnitude of the terms entering each T_j, used as the reference scale
// when T_j itself is close to zero.
double t_scale(const BlockStats& b, const BlockStats& prev) { return (b.c_hat * b.c_hat + b.v) / prev.v; }

double statistic_scale(const TestOutcome& o) {
  double s = 0.0;
  for (const auto& day : o.blocks) {
    for (std::size_t j = 1; j < day.size(); ++j) s += t_scale(day[j], day[j - 1]);
  }
  return s * std::sqrt(static_cast<double>(o.k_n) / (2.0 * o.n_total / o.days)) / std::sqrt(o.days);
}

}  // namespace

TEST(Truncate, FixedThresholdExamples) {
  std::vector<double> dx(100, 0.0), dy(100, 0.0);
  dx[3] = 0.05;
  dy[3] = 0.01;
  dx[7] = 0.06;
  dy[7] = 0.0;
  const IncrementSet inc = truncate(dx, dy, fixed_half(), 100);
  // 0.5 * 0.01^0.49 = 0.0523564274
  EXPECT_NEAR(inc.threshold_x, 0.0523564274, 1e-10);
  EXPECT_NEAR(inc.threshold_x, 0.052359, 1e-5);
  EXPECT_EQ(inc.keep[3], 1);
  EXPECT_EQ(inc.keep[0], 1);  // zero increments always survive
  EXPECT_EQ(inc.keep[7], 0);
  EXPECT_EQ(inc.retained_count, 99);
}

TEST(Truncate, EitherSeriesCanDrop) {
  std::vector<double> dx{0.01, 0.01}, dy{0.01, 0.4};  // cutoff 0.5 * 0.5^0.49 = 0.356
  const IncrementSet inc = truncate(dx, dy, fixed_half(), 2);
  EXPECT_EQ(inc.keep[0], 1);
  EXPECT_EQ(inc.keep[1], 0);
}

TEST(Truncate, Errors) {
  std::vector<double> dx(10, 0.01), dy(9, 0.01);
  EXPECT_THROW(truncate(dx, dy, fixed_half(), 10), InputError);
  std::vector<double> flat(10, 0.0), moving(10, 0.01);
  TruncationSpec adaptive;
  EXPECT_THROW(truncate(flat, moving, adaptive, 10), DegenerateInputError);
  TruncationSpec bad = fixed_half();
  bad.varpi = 0.5;
  EXPECT_THROW(truncate(moving, moving, bad, 10), ConfigError);
  bad = fixed_half();
  bad.mode = FixedThreshold{0.0, 1.0};
  EXPECT_THROW(truncate(moving, moving, bad, 10), ConfigError);
}

TEST(Truncate, AdaptiveUsesBipowerVariation) {
  std::vector<double> dx{1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(bipower_variation(dx), 4.0 * std::numbers::pi);
  std::vector<double> dy{0.5, 0.5, 0.5};
  TruncationSpec s;
  s.mode = AdaptiveThreshold{2.0};
  s.varpi = 0.25;
  const IncrementSet inc = truncate(dx, dy, s, 3);
  EXPECT_DOUBLE_EQ(inc.threshold_x, 2.0 * std::sqrt(4.0 * std::numbers::pi) * std::pow(1.0 / 3.0, 0.25));
}

TEST(Truncate, NoTruncationKeepsEverything) {
  const IncrementSet inc = all_kept({5.0, -7.0, 0.0}, {1e3, 0.0, -2.0});
  EXPECT_EQ(inc.retained_count, 3);
}

TEST(BlockStatistics, HandExpansions) {
  const IncrementSet inc = all_kept({0.1, -0.2, 0.1, 0.1}, {0.3, -0.1, 0.0, 0.0});
  EXPECT_NEAR(block_c(inc, 1.0, 1, 2, 4), 0.0, 1e-15);
  EXPECT_NEAR(block_c(inc, 0.0, 1, 2, 4), 0.1 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(block_c(inc, 0.0, 1, 2, 4), 0.141421, 1e-6);
  EXPECT_NEAR(block_v1(inc, 1, 2, 4), 0.1, 1e-15);
}

TEST(BlockStatistics, ExactFactorGivesZeroResidual) {
  const IncrementSet inc = all_kept({0.25, -0.5, 0.125, 1.0}, {0.5, -1.0, 0.25, 2.0});
  EXPECT_EQ(block_c(inc, 2.0, 1, 2, 4), 0.0);
  EXPECT_EQ(block_c(inc, 2.0, 2, 2, 4), 0.0);
  EXPECT_EQ(block_v2(inc, 2.0, 1, 2, 4), 0.0);
}

TEST(BlockStatistics, FullyTruncatedBlockIsZero) {
  std::vector<double> dx{1.0, 1.0, 0.01, 0.01}, dy{0.0, 0.0, 0.01, 0.02};
  const IncrementSet inc = truncate(dx, dy, fixed_half(), 4);
  EXPECT_EQ(block_v1(inc, 1, 2, 4), 0.0);
  EXPECT_EQ(block_v2(inc, 0.3, 1, 2, 4), 0.0);
  EXPECT_EQ(block_c(inc, 0.3, 1, 2, 4), 0.0);
  EXPECT_GT(block_v1(inc, 2, 2, 4), 0.0);
}

TEST(BlockStatistics, OutOfRangeBlock) {
  const IncrementSet inc = all_kept({0.1, -0.2, 0.1, 0.1, 0.3}, {0.3, -0.1, 0.0, 0.0, 0.1});
  EXPECT_THROW(block_c(inc, 0.0, 3, 2, 5), IndexError);
  EXPECT_THROW(block_v1(inc, 0, 2, 5), IndexError);
  EXPECT_THROW(block_v2(inc, 0.0, 6, 1, 5), IndexError);
  EXPECT_NO_THROW(block_c(inc, 0.0, 2, 2, 5));
}

TEST(DayStatistic, MinusHalfConstruction) {
  const DayStatistic ds = day_statistic(minus_half_day(), 0.0, 2, 4);
  ASSERT_EQ(ds.blocks.size(), 2u);
  EXPECT_NEAR(ds.blocks[0].v, 0.04, 1e-15);
  EXPECT_NEAR(ds.blocks[1].v, 0.02, 1e-15);
  EXPECT_EQ(ds.blocks[1].c_hat, 0.0);
  EXPECT_FALSE(ds.blocks[0].t_j.has_value());
  EXPECT_NEAR(*ds.blocks[1].t_j, -0.5, 1e-14);
  EXPECT_NEAR(ds.t_sum, -0.5, 1e-14);
  EXPECT_EQ(ds.terms, 1);
}

TEST(DayStatistic, SquaredCEqualToVGivesZero) {
  // with k = 2 and b = 0, C^2 = V exactly when dy1 * dy2 = 0 and dx1 = dx2
  const IncrementSet inc = all_kept({0.2, 0.1, 0.1, 0.1}, {0.1, 0.3, 0.3, 0.0});
  const DayStatistic ds = day_statistic(inc, 0.0, 2, 4);
  EXPECT_NEAR(*ds.blocks[1].t_j, 0.0, 1e-14);
}

TEST(DayStatistic, LeftoverIncrementsIgnored) {
  const IncrementSet a = all_kept({0.1, 0.1, 0.1, 0.1, 9.0}, {0.5, -0.5, 0.3, -0.2, 7.0});
  const IncrementSet b = all_kept({0.1, 0.1, 0.1, 0.1}, {0.5, -0.5, 0.3, -0.2});
  // T_j is homogeneous of degree 0 in n, so only the block contents matter
  EXPECT_NEAR(day_statistic(a, 0.4, 2, 5).t_sum, day_statistic(b, 0.4, 2, 4).t_sum, 1e-13);
  EXPECT_EQ(day_statistic(a, 0.4, 2, 5).blocks.size(), 2u);
}

TEST(DayStatistic, Preconditions) {
  const IncrementSet inc = minus_half_day();
  EXPECT_THROW(day_statistic(inc, 0.0, 1, 4), InputError);
  EXPECT_THROW(day_statistic(inc, 0.0, 3, 4), InputError);
  EXPECT_THROW(day_statistic(inc, 0.0, 2, 5), InputError);
}

TEST(DayStatistic, GuardSkipsTinyDenominator) {
  const IncrementSet inc = all_kept({0.0, 0.0, 0.1, 0.2, 0.1, -0.1}, {0.0, 0.0, 0.3, 0.1, 0.2, 0.1});
  const DayStatistic ds = day_statistic(inc, 0.5, 2, 6);
  EXPECT_EQ(ds.skipped, 1);
  EXPECT_EQ(ds.terms, 1);
  EXPECT_TRUE(ds.blocks[1].skipped);
  EXPECT_FALSE(ds.blocks[1].t_j.has_value());
  EXPECT_TRUE(ds.blocks[2].t_j.has_value());
  EXPECT_DOUBLE_EQ(ds.t_sum, *ds.blocks[2].t_j);

  DenominatorGuard strict;
  strict.policy = DenominatorGuard::Policy::Error;
  EXPECT_THROW(day_statistic(inc, 0.5, 2, 6, strict), DegenerateInputError);
}

TEST(DayStatistic, NullMeanIsZero) {
  SimConfig c = flat_config(1.0, 10000, 38);
  c.seed = 77;
  const ObservationGrid g = simulate(c).grid;
  TruncationSpec none;
  none.mode = NoTruncation{};
  std::vector<double> t;
  for (const auto& day : truncate_days(g, none)) {
    for (const auto& b : day_statistic(day, 1.0, 19, 38).blocks) {
      if (b.t_j) t.push_back(*b.t_j);
    }
  }
  ASSERT_EQ(t.size(), 10000u);
  double m = 0.0, s2 = 0.0;
  for (double v : t) m += v;
  m /= t.size();
  for (double v : t) s2 += (v - m) * (v - m);
  const double se = std::sqrt(s2 / (t.size() - 1) / t.size());
  EXPECT_NEAR(m, 0.0, 3.0 * se);
}

TEST(PooledBeta, HandRatio) {
  const IncrementSet inc = all_kept({0.01, -0.02, 0.015}, {0.02, -0.03, 0.02});
  const std::vector<IncrementSet> days{inc};
  EXPECT_NEAR(pooled_beta(days), 0.0011 / 0.000725, 1e-12);
  EXPECT_NEAR(pooled_beta(days), 1.517241, 1e-6);
}

TEST(PooledBeta, ExactAndOrthogonal) {
  std::vector<IncrementSet> days{all_kept({0.1, -0.3, 0.2}, {0.2, -0.6, 0.4})};
  EXPECT_DOUBLE_EQ(pooled_beta(days), 2.0);
  days = {all_kept({0.1, 0.1, 0.0}, {0.2, -0.2, 0.5})};
  EXPECT_EQ(pooled_beta(days), 0.0);
}

TEST(PooledBeta, PoolsAcrossDaysAndSkipsDropped) {
  std::vector<double> dx{0.01, 2.0}, dy{0.03, 0.0};
  const IncrementSet a = truncate(dx, dy, fixed_half(), 2);
  const IncrementSet b = all_kept({0.02, 0.0}, {0.02, 0.0});
  const std::vector<IncrementSet> days{a, b};
  EXPECT_NEAR(pooled_beta(days), (0.0003 + 0.0004) / (0.0001 + 0.0004), 1e-12);
}

TEST(PooledBeta, DegenerateWindow) {
  const std::vector<IncrementSet> days{all_kept({0.0, 0.0}, {0.1, 0.2})};
  EXPECT_THROW(pooled_beta(days), DegenerateInputError);
}

TEST(BetaAvar, ConstantBetaFlatVolatility) {
  // Delta method with sigma = sigma~ = 1 and constant beta: V = 1 for every beta.
  // The block spot betas add roughly 2/k_n of upward bias.
  for (double beta : {0.0, 1.0, 2.0}) {
    SimConfig c = flat_config(beta, 10, 1000);
    c.seed = 31;
    TruncationSpec none;
    none.mode = NoTruncation{};
    const auto days = truncate_days(simulate(c).grid, none);
    const double bh = pooled_beta(days);
    EXPECT_NEAR(beta_avar(days, bh, 50, 1000), 1.0, 0.10) << "beta=" << beta;
  }
}

TEST(BetaAvar, StepBetaAddsDispersionTerm) {
  // beta = 1 then 2 over one day: beta_bar = 1.5 and V = 2 * 0.25 + 1 = 1.5
  SimConfig c = flat_config(1.0, 1, 10000);
  c.beta = StepBeta{1.0, 2.0, 0.5};
  c.seed = 4;
  TruncationSpec none;
  none.mode = NoTruncation{};
  const auto days = truncate_days(simulate(c).grid, none);
  const double bh = pooled_beta(days);
  EXPECT_NEAR(bh, 1.5, 0.05);
  EXPECT_NEAR(beta_avar(days, bh, 100, 10000), 1.5, 0.15);
}

TEST(BetaAvar, Errors) {
  const std::vector<IncrementSet> flat{all_kept({0.0, 0.0, 0.0, 0.0}, {0.1, 0.2, 0.1, 0.3})};
  EXPECT_THROW(beta_avar(flat, 1.0, 2, 4), DegenerateInputError);
  EXPECT_THROW(beta_avar(flat, 1.0, 3, 4), InputError);
}

TEST(BetaAvar, ConfidenceIntervalCoverage) {
  TestConfig cfg;
  int covered = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    SimConfig c;
    c.days = 22;
    c.seed = 9000 + r;
    const TestOutcome o = run_test(simulate(c).grid, cfg);
    if (o.pooled_beta->ci_lo <= 1.0 && 1.0 <= o.pooled_beta->ci_hi) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  EXPECT_GE(rate, 0.90);
  EXPECT_LE(rate, 0.98);
}

TEST(SampleRSquared, PerfectAndOrthogonal) {
  const IncrementSet inc = all_kept({0.1, -0.2, 0.3}, {0.25, -0.5, 0.75});
  EXPECT_NEAR(sample_r_squared(inc, 1.0), 1.0, 1e-15);
  const IncrementSet orth = all_kept({0.1, 0.1, 0.0}, {0.2, -0.2, 0.4});
  EXPECT_EQ(sample_r_squared(orth, 0.0), 0.0);
  const IncrementSet exact = all_kept({0.1, 0.2}, {0.2, 0.4});
  EXPECT_THROW(sample_r_squared(exact, 2.0), DegenerateInputError);
}

TEST(SampleRSquared, ScaledByNIsChiSquare) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  const int n = 10000;
  std::vector<double> stat;
  std::vector<double> dx(n), dy(n);
  TruncationSpec none;
  none.mode = NoTruncation{};
  for (int r = 0; r < 2000; ++r) {
    for (int i = 0; i < n; ++i) {
      dx[i] = z(rng);
      dy[i] = z(rng);
    }
    stat.push_back(n * sample_r_squared(truncate(dx, dy, none, n), 0.0));
  }
  EXPECT_LT(ks_distance(stat, chi2_1_cdf), 0.03);
}

TEST(OracleEquivalence, MatchesBruteForce) {
  for (int s = 0; s < 50; ++s) {
    const oracle::Instance in = oracle::random_instance(100 + s);
    const int n = in.grid.n_per_day;
    const auto lib_days = truncate_days(in.grid, in.spec);
    const auto ref_days = oracle::oracle_days(in);
    for (std::size_t d = 0; d < lib_days.size(); ++d) {
      for (int i = 0; i < n; ++i) ASSERT_EQ(lib_days[d].keep[i] != 0, ref_days[d].keep[i]) << s;
    }
    const double bh = pooled_beta(lib_days);
    EXPECT_LT(oracle::rel_diff(bh, oracle::beta_hat(ref_days)), 1e-12);
    for (std::size_t d = 0; d < lib_days.size(); ++d) {
      const DayStatistic ds = day_statistic(lib_days[d], bh, in.k, n);
      for (const auto& b : ds.blocks) {
        EXPECT_LT(oracle::rel_diff(b.c_hat, oracle::c_hat(ref_days[d], bh, b.j, in.k, n)), 1e-12);
        EXPECT_LT(oracle::rel_diff(b.v1, oracle::v1(ref_days[d], b.j, in.k, n)), 1e-12);
        EXPECT_LT(oracle::rel_diff(b.v2, oracle::v2(ref_days[d], bh, b.j, in.k, n)), 1e-12);
        if (b.t_j) {
          const double scale = t_scale(b, ds.blocks[b.j - 2]);
          EXPECT_LT(oracle::rel_diff(*b.t_j, oracle::t_j(ref_days[d], bh, b.j, in.k, n), scale), 1e-12);
        }
      }
    }
  }
}

class Properties : public ::testing::TestWithParam<int> {};

TEST_P(Properties, CauchySchwarzAndOrthogonality) {
  const oracle::Instance in = oracle::random_instance(5000 + GetParam());
  const int n = in.grid.n_per_day;
  const auto days = truncate_days(in.grid, in.spec);
  const double bh = pooled_beta(days);
  double resid = 0.0, scale = 0.0;
  for (const auto& day : days) {
    for (const auto& b : day_statistic(day, bh, in.k, n).blocks) {
      EXPECT_LE(b.c_hat * b.c_hat, in.k * b.v * (1.0 + 1e-12));
      EXPECT_GE(b.r2, 0.0);
      EXPECT_LE(b.r2, 1.0 + 1e-12);
      EXPECT_NEAR(b.v, b.v1 * b.v2, 1e-15 * std::fabs(b.v));
    }
    for (std::size_t i = 0; i < day.size(); ++i) {
      if (!day.keep[i]) continue;
      resid += day.dx[i] * (day.dy[i] - bh * day.dx[i]);
      scale += std::fabs(day.dx[i] * day.dy[i]);
    }
  }
  EXPECT_LE(std::fabs(resid), 1e-10 * scale);
}

TEST_P(Properties, AffineAndScaleInvariance) {
  const oracle::Instance in = oracle::random_instance(7000 + GetParam(), false);
  TestConfig cfg;
  cfg.k_n = in.k;
  cfg.truncation.mode = NoTruncation{};
  const TestOutcome base = run_test(in.grid, cfg);

  const double a = 0.75 - 0.01 * GetParam();
  ObservationGrid shifted = in.grid;
  for (std::size_t i = 0; i < shifted.y.size(); ++i) shifted.y[i] += a * shifted.x[i];
  const TestOutcome sh = run_test(shifted, cfg);
  EXPECT_NEAR(sh.pooled_beta->value, base.pooled_beta->value + a,
              1e-10 * (1.0 + std::fabs(a) + std::fabs(base.pooled_beta->value)));
  EXPECT_LT(oracle::rel_diff(sh.statistic, base.statistic, statistic_scale(base)), 1e-10);

  const double c = 0.05 + 0.3 * GetParam();
  ObservationGrid scaled = in.grid;
  for (auto& v : scaled.x) v *= c;
  for (auto& v : scaled.y) v *= c;
  const TestOutcome sc = run_test(scaled, cfg);
  EXPECT_LT(oracle::rel_diff(sc.pooled_beta->value, base.pooled_beta->value), 1e-10);
  EXPECT_LT(oracle::rel_diff(sc.statistic, base.statistic, statistic_scale(base)), 1e-10);

  for (std::size_t d = 0; d < base.blocks.size(); ++d) {
    for (std::size_t j = 1; j < base.blocks[d].size(); ++j) {
      const auto& t0 = base.blocks[d][j].t_j;
      if (!t0) continue;
      const double scale = t_scale(base.blocks[d][j], base.blocks[d][j - 1]);
      EXPECT_LT(oracle::rel_diff(*sh.blocks[d][j].t_j, *t0, scale), 1e-10);
      EXPECT_LT(oracle::rel_diff(*sc.blocks[d][j].t_j, *t0, scale), 1e-10);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, Properties, ::testing::Range(0, 100));

TEST(TruncationRobustness, SingleLargeJumpMattersLessThanReseeding) {
  TestConfig cfg;
  double jump_effect = 0.0, reseed_effect = 0.0;
  for (int s = 0; s < 100; ++s) {
    SimConfig c;
    c.days = 5;
    c.seed = 300 + s;
    const ObservationGrid g = simulate(c).grid;
    const TestOutcome base = run_test(g, cfg);

    const auto day0 = truncate_days(g.slice_days(0, 1), cfg.truncation).front();
    ObservationGrid jumped = g;
    const std::size_t at = 10;
    for (std::size_t i = at + 1; i < jumped.x.size(); ++i) {
      jumped.x[i] += 10.0 * day0.threshold_x;
      jumped.y[i] += 10.0 * day0.threshold_y;
    }
    const auto jd = truncate_days(jumped.slice_days(0, 1), cfg.truncation).front();
    ASSERT_EQ(jd.keep[at], 0);

    c.seed = 100300 + s;
    const TestOutcome other = run_test(simulate(c).grid, cfg);
    jump_effect += std::fabs(run_test(jumped, cfg).statistic - base.statistic);
    reseed_effect += std::fabs(other.statistic - base.statistic);
  }
  EXPECT_LT(jump_effect, reseed_effect);
}
