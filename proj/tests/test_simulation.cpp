#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "neyman/neyman.hpp"

namespace {

using namespace neyman;

TEST(RunExperiment, TraceIsConsistentWithSchedule) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 200, 6);
  auto pol = make_policy("clip-ogd", s);
  SplitMix64 rng(99);
  Trace tr = run_experiment(s, *pol, rng);
  ASSERT_EQ(tr.size(), s.size());
  tr.validate();
  for (std::size_t t = 0; t < tr.size(); ++t) {
    double expected = tr.z[t] ? s.y1(t) : s.y0(t);
    ASSERT_DOUBLE_EQ(tr.y[t], expected);
  }
  EXPECT_DOUBLE_EQ(tr.p[0], 0.5);
}

TEST(RunExperiment, SameSeedSameTrace) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 150, 2);
  auto a = make_policy("clip-ogd", s);
  auto b = make_policy("clip-ogd", s);
  SplitMix64 ra(5), rb(5);
  Trace ta = run_experiment(s, *a, ra);
  Trace tb = run_experiment(s, *b, rb);
  for (std::size_t t = 0; t < ta.size(); ++t) {
    ASSERT_EQ(ta.z[t], tb.z[t]);
    ASSERT_DOUBLE_EQ(ta.p[t], tb.p[t]);
  }
}

TEST(MonteCarlo, RepeatRunsAreBitwiseIdentical) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 100, 4);
  SimConfig cfg;
  cfg.replications = 300;
  cfg.seed = 12;
  cfg.levels = {0.05, 0.2};
  cfg.threads = 1;
  SimSummary a = monte_carlo(s, "clip-ogd", cfg);
  SimSummary b = monte_carlo(s, "clip-ogd", cfg);
  EXPECT_EQ(a.mean_tau_hat, b.mean_tau_hat);
  EXPECT_EQ(a.empirical_var_tau_hat, b.empirical_var_tau_hat);
  EXPECT_EQ(a.mean_regret, b.mean_regret);
  EXPECT_EQ(a.coverage, b.coverage);
  EXPECT_EQ(a.mean_width, b.mean_width);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 80, 8);
  SimConfig cfg;
  cfg.replications = 250;
  cfg.seed = 3;
  cfg.levels = {0.1};
  cfg.threads = 1;
  SimSummary solo = monte_carlo(s, "etc:t0=cbrt", cfg);
  for (unsigned threads : {2u, 3u, 7u}) {
    cfg.threads = threads;
    SimSummary multi = monte_carlo(s, "etc:t0=cbrt", cfg);
    EXPECT_EQ(solo.mean_tau_hat, multi.mean_tau_hat) << threads;
    EXPECT_EQ(solo.empirical_var_tau_hat, multi.empirical_var_tau_hat);
    EXPECT_EQ(solo.mean_regret, multi.mean_regret);
    EXPECT_EQ(solo.coverage, multi.coverage);
  }
}

TEST(MonteCarlo, ReplicationsAreReconstructibleFromSubstreams) {
  OutcomeSchedule s = gen_synthetic("constant-effect", 60, 10);
  SimConfig cfg;
  cfg.replications = 5;
  cfg.seed = 777;
  cfg.threads = 2;
  std::vector<RepRecord> records;
  monte_carlo(s, "clip-ogd", cfg, &records);
  ASSERT_EQ(records.size(), 5u);
  for (std::uint64_t r = 0; r < 5; ++r) {
    auto pol = make_policy("clip-ogd", s);
    SplitMix64 rng = substream(cfg.seed, r);
    Trace tr = run_experiment(s, *pol, rng);
    EffectEstimate est = variance_bound_estimate(tr);
    EXPECT_EQ(records[r].tau_hat, est.tau_hat) << "rep " << r;
    EXPECT_EQ(records[r].t_vb_hat, est.t_vb_hat) << "rep " << r;
    EXPECT_EQ(records[r].regret, neyman_regret(s, tr.p)) << "rep " << r;
  }
}

TEST(MonteCarlo, AgreesWithExactEnumerationOnSmallHorizon) {
  // Small-horizon cross-check of the whole sampling stack against the
  // exact walk: the Monte Carlo mean must sit within 4 standard errors.
  OutcomeSchedule s({1.3, 0.4, 2.0, 0.9, 1.1, 0.6, 1.7, 0.2},
                    {0.8, 1.9, 0.3, 1.2, 0.5, 1.4, 0.7, 1.0});
  auto pol = make_policy("clip-ogd", s);
  ExactResults ex = enumerate_exact(s, *pol);

  SimConfig cfg;
  cfg.replications = 1000000;
  cfg.seed = 31415;
  cfg.threads = 0;
  SimSummary mc = monte_carlo(s, "clip-ogd", cfg);

  double se = std::sqrt(ex.var_tau_hat / static_cast<double>(cfg.replications));
  EXPECT_NEAR(mc.mean_tau_hat, ex.mean_tau_hat, 4.0 * se);

  double t_var_exact = static_cast<double>(s.size()) * ex.var_tau_hat;
  EXPECT_NEAR(mc.normalized_empirical_variance, t_var_exact,
              0.02 * t_var_exact);

  double regret_se_bound = 4.0 * std::abs(ex.expected_regret) /
                               std::sqrt(static_cast<double>(cfg.replications)) +
                           1e-3;
  EXPECT_NEAR(mc.mean_regret, ex.expected_regret,
              std::max(regret_se_bound, 0.05 * std::abs(ex.expected_regret)));
}

TEST(MonteCarlo, FixedDesignRegretIsConstantAcrossReps) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 50, 13);
  SimConfig cfg;
  cfg.replications = 40;
  cfg.seed = 1;
  cfg.threads = 1;
  std::vector<RepRecord> records;
  SimSummary sum = monte_carlo(s, "bernoulli:0.4", cfg, &records);
  std::vector<double> probs(s.size(), 0.4);
  double expected = neyman_regret(s, probs);
  for (const auto& rec : records) {
    ASSERT_DOUBLE_EQ(rec.regret, expected);
  }
  EXPECT_NEAR(sum.mean_regret, expected, 1e-12 * std::abs(expected));
}

TEST(MonteCarlo, SingleReplicationIsFlaggedDegenerate) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 30, 2);
  SimConfig cfg;
  cfg.replications = 1;
  cfg.seed = 9;
  cfg.threads = 1;
  SimSummary sum = monte_carlo(s, "bernoulli:0.5", cfg);
  EXPECT_TRUE(sum.degenerate);
  EXPECT_EQ(sum.rep_count, 1u);
  EXPECT_DOUBLE_EQ(sum.empirical_var_tau_hat, 0.0);
  EXPECT_DOUBLE_EQ(sum.normalized_empirical_variance, 0.0);

  cfg.replications = 2;
  EXPECT_FALSE(monte_carlo(s, "bernoulli:0.5", cfg).degenerate);
}

TEST(MonteCarlo, CoverageBookkeeping) {
  OutcomeSchedule s = gen_synthetic("constant-effect", 500, 21);
  SimConfig cfg;
  cfg.replications = 400;
  cfg.seed = 5;
  cfg.levels = {0.05, 0.1};
  cfg.threads = 0;
  SimSummary sum = monte_carlo(s, "clip-ogd", cfg);
  EXPECT_NEAR(sum.true_tau, finite_stats(s).tau, 1e-15);
  for (const auto& kind : {"chebyshev", "wald"}) {
    for (const auto& level : {"0.05", "0.1"}) {
      ASSERT_TRUE(sum.coverage.at(kind).count(level)) << kind << level;
      double rate = sum.coverage.at(kind).at(level);
      EXPECT_GE(rate, 0.0);
      EXPECT_LE(rate, 1.0);
      EXPECT_GT(sum.mean_width.at(kind).at(level), 0.0);
    }
  }
  // The conservative interval is wider, so it can never cover less often.
  EXPECT_GE(sum.coverage.at("chebyshev").at("0.05"),
            sum.coverage.at("wald").at("0.05"));
  EXPECT_GE(sum.mean_width.at("chebyshev").at("0.05"),
            sum.mean_width.at("wald").at("0.05"));
}

TEST(MonteCarlo, InputValidation) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 20, 2);
  SimConfig cfg;
  cfg.replications = 0;
  EXPECT_THROW(monte_carlo(s, "bernoulli:0.5", cfg), std::invalid_argument);
  cfg.replications = 10;
  cfg.levels = {1.5};
  EXPECT_THROW(monte_carlo(s, "bernoulli:0.5", cfg), std::invalid_argument);
  cfg.levels.clear();
  EXPECT_THROW(monte_carlo(OutcomeSchedule(), "bernoulli:0.5", cfg),
               std::invalid_argument);
  EXPECT_THROW(monte_carlo(s, "nonsense", cfg), SpecError);
}

TEST(VarianceCurve, RowsCarryExactReferenceColumns) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 64, 31);
  SimConfig cfg;
  cfg.replications = 100;
  cfg.seed = 8;
  cfg.threads = 0;
  std::vector<std::string> designs{"bernoulli:0.5", "clip-ogd"};
  std::vector<std::size_t> grid{16, 32, 64};
  auto points = variance_curve(s, designs, grid, cfg);
  ASSERT_EQ(points.size(), 6u);

  std::size_t i = 0;
  for (std::size_t horizon : grid) {
    FiniteStats st = finite_stats(s.prefix(horizon));
    for (const auto& design : designs) {
      ASSERT_EQ(points[i].horizon, horizon);
      ASSERT_EQ(points[i].design, design);
      EXPECT_DOUBLE_EQ(points[i].normalized_neyman_variance,
                       neyman_summary(st).t_var_neyman);
      EXPECT_DOUBLE_EQ(points[i].normalized_bernoulli_half_variance,
                       bernoulli_variance(st, 0.5));
      EXPECT_GT(points[i].normalized_empirical_variance, 0.0);
      ++i;
    }
  }
}

TEST(VarianceCurve, HorizonValidation) {
  OutcomeSchedule s = gen_synthetic("iid-scaled", 64, 31);
  SimConfig cfg;
  cfg.replications = 10;
  EXPECT_THROW(variance_curve(s, {"clip-ogd"}, {65}, cfg),
               std::invalid_argument);
  EXPECT_THROW(variance_curve(s, {"clip-ogd"}, {}, cfg),
               std::invalid_argument);
  EXPECT_THROW(variance_curve(s, {}, {16}, cfg), std::invalid_argument);
}

TEST(VarianceCurve, PrefixProtocolMatchesDirectRun) {
  // A curve point at horizon n must equal a monte_carlo run on the first n
  // units: same substreams, same policy defaults resolved from n.
  OutcomeSchedule s = gen_synthetic("iid-scaled", 48, 12);
  SimConfig cfg;
  cfg.replications = 60;
  cfg.seed = 44;
  cfg.threads = 1;
  auto points = variance_curve(s, {"clip-ogd"}, {24}, cfg);
  ASSERT_EQ(points.size(), 1u);
  SimSummary direct = monte_carlo(s.prefix(24), "clip-ogd", cfg);
  EXPECT_EQ(points[0].normalized_empirical_variance,
            direct.normalized_empirical_variance);
  EXPECT_EQ(points[0].mean_regret, direct.mean_regret);
}

}  // namespace
