#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "seqalt/likelihood.hpp"

using namespace seqalt;

namespace {

const ModelParams kTruth{0.00157, 0.3188, 0.7259};

Dataset simulate(const ModelParams& th, const TestConfig& cfg, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double qs[] = {0.15, 0.9, 0.15, 0.9, 0.5};
  Dataset d;
  for (int i = 0; i < n; ++i) {
    const double x = qs[i % 5] * cfg.sigma_ult;
    const double t = std::exp(mu(x, th.A, th.B, cfg) + th.nu * z(rng));
    d.push_back(t > cfg.censor_time ? Observation{x, cfg.censor_time, 1} : Observation{x, t, 0});
  }
  return d;
}

// Product-form likelihood written with the raw normal density and cdf.
double product_likelihood(const ModelParams& th, const Dataset& d, const TestConfig& cfg) {
  double L = 1.0;
  for (const auto& o : d) {
    const double z = (std::log(o.t) - mu(o.x, th.A, th.B, cfg)) / th.nu;
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
    const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
    L *= o.delta ? (1.0 - Phi) : phi / (th.nu * o.t);
  }
  return L;
}

}  // namespace

TEST(LogLikelihood, SingleCensoredUnit) {
  TestConfig cfg;
  const Observation o{669.835, 1e8, 1};
  const double z = (std::log(1e8) - mu(o.x, kTruth.A, kTruth.B, cfg)) / kTruth.nu;
  EXPECT_NEAR(log_likelihood(kTruth, {o}, cfg), std::log(1.0 - std_cdf(z, cfg.family)), 1e-12);
}

TEST(LogLikelihood, SingleFailureAtLocation) {
  TestConfig cfg;
  const double t = std::exp(mu(669.835, kTruth.A, kTruth.B, cfg));
  const double expected = -0.5 * std::log(2 * std::numbers::pi) - std::log(kTruth.nu) - std::log(t);
  EXPECT_NEAR(log_likelihood(kTruth, {{669.835, t, 0}}, cfg), expected, 1e-12);
}

TEST(LogLikelihood, MatchesProductForm) {
  TestConfig cfg;
  cfg.censor_time = 3e8;
  const Dataset d = simulate(kTruth, cfg, 5, 99);
  int censored = 0;
  for (const auto& o : d) censored += o.delta;
  ASSERT_GT(censored, 0);
  ASSERT_LT(censored, 5);
  EXPECT_NEAR(log_likelihood(kTruth, d, cfg), std::log(product_likelihood(kTruth, d, cfg)), 1e-10);
}

TEST(LogLikelihood, AdditiveOverPartition) {
  TestConfig cfg;
  cfg.censor_time = 1e9;
  const Dataset d = simulate(kTruth, cfg, 40, 3);
  const Dataset a(d.begin(), d.begin() + 17), b(d.begin() + 17, d.end());
  const ModelParams th{0.002, 0.4, 0.9};
  EXPECT_NEAR(log_likelihood(th, d, cfg), log_likelihood(th, a, cfg) + log_likelihood(th, b, cfg), 1e-9);
}

TEST(LogLikelihood, FarTailCensoringStaysFinite) {
  TestConfig cfg;
  const Observation o{0.75 * cfg.sigma_ult, 1e30, 1};
  EXPECT_TRUE(std::isfinite(log_likelihood(kTruth, {o}, cfg)));
}

TEST(LogLikelihood, InvalidInputs) {
  TestConfig cfg;
  EXPECT_THROW(log_likelihood({-1.0, 0.3, 0.7}, {{500.0, 1e6, 0}}, cfg), DomainError);
  EXPECT_THROW(log_likelihood(kTruth, {{500.0, -1.0, 0}}, cfg), ValidationError);
  EXPECT_THROW(log_likelihood(kTruth, {{500.0, 1e6, 2}}, cfg), ValidationError);
  EXPECT_THROW(log_likelihood(kTruth, {{2000.0, 1e6, 0}}, cfg), ValidationError);
}

TEST(FitMle, ErrorPaths) {
  TestConfig cfg;
  const ParamBounds b;
  EXPECT_THROW(fit_mle({{500.0, 1e6, 0}, {600.0, 1e6, 0}}, cfg, b), InsufficientDataError);
  EXPECT_THROW(fit_mle({{500.0, 1e6, 0}, {500.0, 2e6, 0}, {500.0, 3e6, 0}}, cfg, b), InsufficientDataError);
  EXPECT_THROW(fit_mle({{500.0, 1e6, 1}, {600.0, 1e6, 1}, {700.0, 1e6, 1}}, cfg, b), EstimationError);
}

TEST(FitMle, RecoversTruthAtLargeSample) {
  TestConfig cfg;
  cfg.censor_time = 1e30;
  int ok = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto fit = fit_mle(simulate(kTruth, cfg, 500, 1000 + s), cfg, ParamBounds{});
    ok += std::abs(fit.theta.A / kTruth.A - 1) < 0.1 && std::abs(fit.theta.B / kTruth.B - 1) < 0.1 &&
          std::abs(fit.theta.nu / kTruth.nu - 1) < 0.1;
  }
  EXPECT_GE(ok, 48);
}

TEST(FitMle, NearDeterministicDataInterpolates) {
  TestConfig cfg;
  cfg.censor_time = 1e30;
  const ModelParams sharp{kTruth.A, kTruth.B, 0.01};
  const Dataset d = simulate(sharp, cfg, 30, 5);
  const auto fit = fit_mle(d, cfg, ParamBounds{});
  EXPECT_LT(fit.theta.nu, 0.03);
  for (const auto& o : d) EXPECT_NEAR(mu(o.x, fit.theta.A, fit.theta.B, cfg), std::log(o.t), 0.05);
}

TEST(FitMle, DuplicatedDataSameMaximizer) {
  TestConfig cfg;
  cfg.censor_time = 1e9;
  const Dataset d = simulate(kTruth, cfg, 30, 8);
  Dataset dd = d;
  dd.insert(dd.end(), d.begin(), d.end());
  const auto f1 = fit_mle(d, cfg, ParamBounds{});
  const auto f2 = fit_mle(dd, cfg, ParamBounds{});
  EXPECT_NEAR(f2.theta.A / f1.theta.A, 1.0, 1e-4);
  EXPECT_NEAR(f2.theta.B / f1.theta.B, 1.0, 1e-4);
  EXPECT_NEAR(f2.theta.nu / f1.theta.nu, 1.0, 1e-4);
  EXPECT_NEAR(f2.log_likelihood, 2 * f1.log_likelihood, 1e-6 * std::abs(f1.log_likelihood));
}

TEST(FitMle, StaysInsideBoundsAndIsLocallyOptimal) {
  TestConfig cfg;
  cfg.censor_time = 1e9;
  for (int s = 0; s < 10; ++s) {
    const Dataset d = simulate(kTruth, cfg, 12 + s, 200 + s);
    ParamBounds b;
    b.nu_hi = 0.8;  // tight enough that some fits land on it
    const auto fit = fit_mle(d, cfg, b);
    EXPECT_TRUE(b.contains(fit.theta));
    EXPECT_NEAR(fit.log_likelihood, log_likelihood(fit.theta, d, cfg), 1e-9);
    if (fit.boundary_hit) continue;
    for (int k = 0; k < 3; ++k)
      for (double f : {0.999, 1.001}) {
        ModelParams p = fit.theta;
        (k == 0 ? p.A : k == 1 ? p.B : p.nu) *= f;
        EXPECT_LE(log_likelihood(p, d, cfg), fit.log_likelihood + 1e-9) << s << " " << k;
      }
  }
}
