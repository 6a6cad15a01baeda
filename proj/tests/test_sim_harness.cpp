#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "seqalt/sim_harness.hpp"

using namespace seqalt;

namespace {

const ModelParams kTruth{0.00157, 0.3188, 0.7259};

StudyConfig tiny_study() {
  StudyConfig sc;
  sc.cfg.censor_time = 5e9;
  sc.mcmc.length = 1200;
  sc.mcmc.burn_in = 200;
  sc.mcmc.thin = 10;
  sc.trials = 2;
  sc.strategies = {{"x", {3, 1}}, {"y", {3, 3}}};
  sc.threads = 1;
  return sc;
}

}  // namespace

TEST(SimulateLifetime, ZeroScaleIsDeterministic) {
  TestConfig cfg;
  cfg.censor_time = 1e30;
  std::mt19937_64 rng(1);
  const double x = 0.5 * cfg.sigma_ult;
  for (int i = 0; i < 5; ++i) {
    const Observation o = simulate_lifetime({kTruth.A, kTruth.B, 0.0}, x, cfg, rng);
    EXPECT_EQ(o.delta, 0);
    EXPECT_NEAR(o.t, std::exp(mu(x, kTruth.A, kTruth.B, cfg)), 1e-12 * o.t);
  }
}

TEST(SimulateLifetime, FarBelowHorizonIsCensored) {
  // the smallest-extreme-value lower tail is heavier, so it needs a lower horizon
  for (auto [fam, zc] : {std::pair{DistributionFamily::Lognormal, -6.0}, std::pair{DistributionFamily::Weibull, -10.0}}) {
    TestConfig cfg;
    cfg.family = fam;
    const double x = 0.5 * cfg.sigma_ult;
    cfg.censor_time = std::exp(mu(x, kTruth.A, kTruth.B, cfg) + zc * kTruth.nu);
    std::mt19937_64 rng(2);
    int censored = 0;
    for (int i = 0; i < 10000; ++i) {
      const Observation o = simulate_lifetime(kTruth, x, cfg, rng);
      censored += o.delta;
      if (o.delta) {
        EXPECT_EQ(o.t, cfg.censor_time);
      }
    }
    EXPECT_LT(std_cdf(zc, fam), 1e-3);
    EXPECT_GT(censored / 10000.0, 0.999);
  }
}

TEST(SimulateLifetime, MedianMatchesLocation) {
  TestConfig cfg;
  cfg.censor_time = 1e30;
  std::mt19937_64 rng(3);
  const double x = 0.6 * cfg.sigma_ult;
  std::vector<double> t;
  for (int i = 0; i < 100000; ++i) t.push_back(simulate_lifetime(kTruth, x, cfg, rng).t);
  std::nth_element(t.begin(), t.begin() + 50000, t.end());
  const double med = std::exp(mu(x, kTruth.A, kTruth.B, cfg));
  EXPECT_NEAR(t[50000], med, 0.01 * med);
}

TEST(MMeasure, ClosedFormCases) {
  EXPECT_EQ(m_measure({kTruth, kTruth}, kTruth), 0.0);
  EXPECT_NEAR(m_measure({{2 * kTruth.A, 2 * kTruth.B, 2 * kTruth.nu}}, kTruth), 3.0, 1e-14);
  EXPECT_THROW(m_measure({}, kTruth), ValidationError);
  EXPECT_THROW(m_measure({kTruth}, {0.0, 1.0, 1.0}), DomainError);
}

TEST(MMeasure, FiveTrialFixture) {
  const std::vector<ModelParams> est{{0.0015, 0.31, 0.70}, {0.0017, 0.33, 0.80}, {0.0012, 0.35, 0.65},
                                     {0.0020, 0.29, 0.75}, {0.0016, 0.32, 0.72}};
  // column-wise sums of squared relative errors, written out
  double oracle = 0.0;
  const double truth[3] = {kTruth.A, kTruth.B, kTruth.nu};
  for (int j = 0; j < 3; ++j) {
    double col = 0.0;
    for (const auto& e : est) {
      const double v[3] = {e.A, e.B, e.nu};
      col += (v[j] - truth[j]) * (v[j] - truth[j]) / (truth[j] * truth[j]);
    }
    oracle += col / 5.0;
  }
  EXPECT_NEAR(m_measure(est, kTruth), oracle, 1e-12);
}

TEST(RunTrial, SingleRunAddsOneObservation) {
  StudyConfig sc = tiny_study();
  const DesignSession templ = session_template(sc);
  const TrialRecord t = run_trial({"one", {1, 0}}, sc.truth, templ, 5);
  EXPECT_EQ(t.initial.size(), 3u);
  ASSERT_EQ(t.runs.size(), 1u);
  EXPECT_EQ(t.runs[0].run, 1);
  EXPECT_EQ(t.runs[0].obs.x, t.runs[0].q * sc.cfg.sigma_ult);
  EXPECT_TRUE(std::isfinite(t.runs[0].avar));
}

TEST(RunTrial, AllDOptimalStrategyAndDeterminism) {
  StudyConfig sc = tiny_study();
  const DesignSession templ = session_template(sc);
  const StrategySpec b{"b", {4, 4}};
  const TrialRecord t1 = run_trial(b, sc.truth, templ, 17);
  const TrialRecord t2 = run_trial(b, sc.truth, templ, 17);
  ASSERT_EQ(t1.runs.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(t1.runs[r].criterion, Criterion::BayesD);
    EXPECT_EQ(t1.runs[r].obs, t2.runs[r].obs);
    EXPECT_EQ(t1.runs[r].avar, t2.runs[r].avar);
  }
}

TEST(RunTrial, UserSuppliedInitialDataUsedVerbatim) {
  StudyConfig sc = tiny_study();
  sc.truth.initial_data = {{500.0, 3e8, 0}, {700.0, 2e7, 0}, {900.0, 1e6, 0}};
  const TrialRecord t = run_trial({"one", {1, 0}}, sc.truth, session_template(sc), 1);
  EXPECT_EQ(t.initial, sc.truth.initial_data);
}

TEST(RunStudy, AggregatesAreConsistentAndThreadFree) {
  StudyConfig sc = tiny_study();
  const StudyResult r1 = run_study(sc);
  sc.threads = 2;
  const StudyResult r2 = run_study(sc);
  ASSERT_EQ(r1.summaries.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& s = r1.summaries[i];
    EXPECT_EQ(s.mean_avar, r2.summaries[i].mean_avar);
    EXPECT_EQ(s.m, r2.summaries[i].m);
    EXPECT_EQ(s.mean_avar.size(), 3u);
    double tot = 0.0;
    for (double a : s.allocation) tot += a;
    EXPECT_NEAR(tot, 1.0, 1e-12);
    for (const auto& row : s.per_run_allocation) {
      double rt = 0.0;
      for (double a : row) rt += a;
      EXPECT_NEAR(rt, 1.0, 1e-12);
    }
    for (double v : s.mean_avar) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(RunStudy, SingleTrialEqualsTrialRecord) {
  StudyConfig sc = tiny_study();
  sc.trials = 1;
  sc.strategies = {{"only", {3, 0}}};
  const StudyResult r = run_study(sc);
  const auto& t = r.trials[0][0];
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(r.summaries[0].mean_avar[k], t.runs[k].avar);
    EXPECT_EQ(r.summaries[0].m[k], m_measure({t.runs[k].theta_hat}, sc.truth.theta));
  }
}

TEST(RunStudy, RejectsBadConfig) {
  StudyConfig sc = tiny_study();
  sc.trials = 0;
  EXPECT_THROW(run_study(sc), ValidationError);
  sc = tiny_study();
  sc.strategies = {{"x", {3, 1}}, {"x", {3, 0}}};
  EXPECT_THROW(run_study(sc), ValidationError);
}
