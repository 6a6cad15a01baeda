#pragma once

// Epaarachchi-Clausen stress-life relationship for constant-amplitude
// fatigue of fibre composites. The location of log cycles-to-failure at
// stress x is
//
//   mu(x) = (1/B) log{ (B/A) h^B (s - 1) s^(gamma - 1) (1 - psi)^(-gamma) + 1 },
//   s = sigma_ult / x,
//
// with psi = psi(R) and gamma = 1.6 - psi |sin(alpha)|.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "seqalt/distributions.hpp"
#include "seqalt/errors.hpp"

namespace seqalt {

// Known planning constants of a fatigue campaign.
struct TestConfig {
  double h = 2.0;             // cyclic frequency
  double R = 0.1;             // stress ratio sigma_min / sigma_max
  double alpha = 0.0;         // degrees between loading and fibre direction
  double sigma_ult = 1339.67; // ultimate stress, same units as x
  DistributionFamily family = DistributionFamily::Lognormal;
  double p = 0.05;            // quantile of interest
  double censor_time = 5.0e9; // Type-I censoring horizon in cycles

  bool operator==(const TestConfig&) const = default;
};

struct ModelParams {
  double A = 0.0;
  double B = 0.0;
  double nu = 0.0;

  bool operator==(const ModelParams&) const = default;
};

inline void validate(const TestConfig& cfg) {
  if (!(cfg.sigma_ult > 0.0) || !std::isfinite(cfg.sigma_ult))
    throw DomainError("TestConfig: sigma_ult must be positive");
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw DomainError("TestConfig: h must be positive");
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw DomainError("TestConfig: p must lie in (0, 1)");
  if (!(cfg.censor_time > 0.0)) throw DomainError("TestConfig: censor_time must be positive");
  if (cfg.R == 1.0 || !std::isfinite(cfg.R)) throw DomainError("TestConfig: R must be finite and != 1");
  if (!std::isfinite(cfg.alpha)) throw DomainError("TestConfig: alpha must be finite");
}

inline void validate(const ModelParams& theta) {
  if (!(theta.A > 0.0) || !(theta.B > 0.0) || !(theta.nu > 0.0) || !std::isfinite(theta.A) ||
      !std::isfinite(theta.B) || !std::isfinite(theta.nu))
    throw DomainError("ModelParams: A, B and nu must be positive and finite");
}

inline double psi_of_R(double R) {
  if (R == 1.0) throw DomainError("psi_of_R: undefined at R = 1");
  return R < 1.0 ? R : 1.0 / R;
}

// gamma(alpha) = 1.6 - psi(R) |sin(alpha)|, alpha in degrees.
inline double gamma_of_alpha(double alpha_deg, double R) {
  const double psi = psi_of_R(R);
  return 1.6 - psi * std::abs(std::sin(alpha_deg * std::numbers::pi / 180.0));
}

namespace detail {

inline void check_stress(double x, double A, double B, const TestConfig& cfg) {
  if (!(x > 0.0) || !(x < cfg.sigma_ult))
    throw DomainError("stress level must satisfy 0 < x < sigma_ult (got " + std::to_string(x) + ")");
  if (!(A > 0.0) || !(B > 0.0)) throw DomainError("model parameters A and B must be positive");
}

// Stress-dependent factor (s - 1) s^(gamma - 1) (1 - psi)^(-gamma); it does
// not involve (A, B).
inline double stress_factor(double x, const TestConfig& cfg) {
  const double psi = psi_of_R(cfg.R);
  const double gamma = gamma_of_alpha(cfg.alpha, cfg.R);
  const double s = cfg.sigma_ult / x;
  return (s - 1.0) * std::pow(s, gamma - 1.0) * std::pow(1.0 - psi, -gamma);
}

// G = (B/A) h^B K(x); mu = log1p(G) / B.
inline double growth_term(double x, double A, double B, const TestConfig& cfg) {
  return (B / A) * std::pow(cfg.h, B) * stress_factor(x, cfg);
}

}  // namespace detail

inline double mu(double x, double A, double B, const TestConfig& cfg) {
  detail::check_stress(x, A, B, cfg);
  return std::log1p(detail::growth_term(x, A, B, cfg)) / B;
}

struct MuGradient {
  double dA = 0.0;
  double dB = 0.0;
};

// Analytic partials of mu with respect to A and B.
inline MuGradient mu_grad(double x, double A, double B, const TestConfig& cfg) {
  detail::check_stress(x, A, B, cfg);
  const double G = detail::growth_term(x, A, B, cfg);
  const double ratio = G / (1.0 + G);
  const double L = std::log1p(G);
  MuGradient g;
  g.dA = -ratio / (A * B);
  g.dB = (ratio * (1.0 / B + std::log(cfg.h)) - L / B) / B;
  return g;
}

// log of the p-th quantile life at stress x: mu(x) + z_p nu.
inline double log_quantile_life(double x, const ModelParams& theta, const TestConfig& cfg) {
  return mu(x, theta.A, theta.B, cfg) + std_quantile(cfg.p, cfg.family) * theta.nu;
}

}  // namespace seqalt
