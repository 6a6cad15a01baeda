#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "seqalt/distributions.hpp"

using namespace seqalt;

namespace {
constexpr auto kLN = DistributionFamily::Lognormal;
constexpr auto kWB = DistributionFamily::Weibull;
}  // namespace

TEST(StdCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(std_cdf(0.0, kLN), 0.5);
  EXPECT_NEAR(std_cdf(0.0, kWB), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(StdCdf, NormalMatchesTrapezoidQuadrature) {
  // Trapezoid rule on the density over [-40, -1]; Phi(-1) to 40 digits is
  // 0.158655253931457051414767454367962...
  const double h = 1e-4;
  double sum = 0.0;
  const int n = static_cast<int>(39.0 / h);
  for (int i = 0; i <= n; ++i) {
    const double z = -40.0 + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  }
  sum *= h;
  EXPECT_NEAR(std_cdf(-1.0, kLN), sum, 1e-9);
  EXPECT_NEAR(std_cdf(-1.0, kLN), 0.15865525393145705, 1e-15);
}

TEST(StdCdf, NonFiniteIsDomainError) {
  EXPECT_THROW(std_cdf(std::numeric_limits<double>::quiet_NaN(), kLN), DomainError);
  EXPECT_THROW(std_cdf(std::numeric_limits<double>::infinity(), kWB), DomainError);
  EXPECT_THROW(std_pdf(std::numeric_limits<double>::quiet_NaN(), kWB), DomainError);
}

TEST(StdCdf, MonotoneWithLimits) {
  for (auto fam : {kLN, kWB}) {
    double prev = 0.0;
    for (double z = -30.0; z <= 30.0; z += 0.01) {
      const double c = std_cdf(z, fam);
      EXPECT_GE(c, prev);
      prev = c;
    }
    EXPECT_LT(std_cdf(-30.0, fam), 1e-12);
    EXPECT_NEAR(std_cdf(30.0, fam), 1.0, 1e-15);
  }
}

TEST(StdPdf, KnownValues) {
  EXPECT_NEAR(std_pdf(0.0, kLN), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(std_pdf(0.0, kWB), std::exp(-1.0), 1e-15);
}

TEST(StdPdf, IsDerivativeOfCdf) {
  const double h = 1e-5;
  for (auto fam : {kLN, kWB}) {
    EXPECT_NEAR((std_cdf(0.7 + h, fam) - std_cdf(0.7 - h, fam)) / (2 * h), std_pdf(0.7, fam), 1e-6);
    for (double z = -6.0; z <= 6.0; z += 0.05)
      EXPECT_NEAR((std_cdf(z + h, fam) - std_cdf(z - h, fam)) / (2 * h), std_pdf(z, fam), 1e-6) << z;
  }
}

TEST(StdPdf, IntegratesToOne) {
  for (auto fam : {kLN, kWB}) {
    double sum = 0.0;
    const double h = 1e-3;
    for (double z = -40.0; z <= 10.0; z += h) sum += std_pdf(z, fam) * h;
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(StdQuantile, KnownValues) {
  EXPECT_NEAR(std_quantile(0.5, kLN), 0.0, 1e-15);
  EXPECT_NEAR(std_quantile(1.0 - std::exp(-1.0), kWB), 0.0, 1e-15);
  EXPECT_NEAR(std_quantile(0.05, kWB), std::log(-std::log(0.95)), 1e-15);
  EXPECT_NEAR(std_quantile(0.05, kLN), -1.6448536269514727, 1e-14);
}

TEST(StdQuantile, OutsideUnitIntervalIsDomainError) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    EXPECT_THROW(std_quantile(p, kLN), DomainError);
    EXPECT_THROW(std_quantile(p, kWB), DomainError);
  }
}

TEST(StdQuantile, RoundTripGrid) {
  for (auto fam : {kLN, kWB})
    for (int i = 1; i <= 999; ++i) {
      const double p = i / 1000.0;
      EXPECT_NEAR(std_cdf(std_quantile(p, fam), fam), p, 1e-10) << p;
    }
  for (double p : {1e-12, 1e-8, 1e-4, 1.0 - 1e-6})
    EXPECT_NEAR(std_cdf(std_quantile(p, kLN), kLN), p, 1e-10 * std::max(p, 1e-2));
}

TEST(StdLogSurvival, TailStaysFinite) {
  // beyond erfc underflow the series must continue smoothly
  EXPECT_TRUE(std::isfinite(std_log_survival(50.0, kLN)));
  EXPECT_NEAR(std_log_survival(34.999, kLN), std_log_survival(35.0, kLN), 0.04);
  EXPECT_NEAR(std_log_survival(0.0, kLN), std::log(0.5), 1e-15);
  EXPECT_NEAR(std_log_survival(1.0, kWB), -std::exp(1.0), 1e-15);
  EXPECT_NEAR(std_hazard(0.3, kLN) * std_survival(0.3, kLN), std_pdf(0.3, kLN), 1e-15);
}
