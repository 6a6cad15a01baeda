#pragma once

// Standardized log-location-scale distributions.
//
// A lifetime T belongs to the family when (log T - mu) / nu follows one of
// the standardized laws below:
//   Lognormal -> standard normal
//   Weibull   -> smallest extreme value, F(z) = 1 - exp(-exp(z))

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "seqalt/errors.hpp"

namespace seqalt {

enum class DistributionFamily { Lognormal, Weibull };

inline std::string_view to_string(DistributionFamily family) {
  return family == DistributionFamily::Lognormal ? "lognormal" : "weibull";
}

inline DistributionFamily family_from_string(std::string_view name) {
  if (name == "lognormal" || name == "Lognormal") return DistributionFamily::Lognormal;
  if (name == "weibull" || name == "Weibull") return DistributionFamily::Weibull;
  throw ValidationError("unknown distribution family '" + std::string(name) + "'");
}

namespace detail {

inline void require_finite(double z, const char* what) {
  if (!std::isfinite(z)) throw DomainError(std::string(what) + ": argument must be finite");
}

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

// log(1 - Phi(z)) for the standard normal. erfc keeps full relative accuracy
// until it underflows near z = 37; past that the Mills-ratio series is exact
// to double precision.
inline double normal_log_survival(double z) {
  if (z < 35.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) + std::log(series);
}

// Acklam's rational approximation to the normal quantile (relative error
// about 1.2e-9), polished by one Newton step on the exact cdf.
inline double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Newton step; the residual is taken on whichever tail is representable.
  const double pdf = std::exp(-0.5 * x * x - kLogSqrt2Pi);
  const double resid = (p < 0.5) ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                                 : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  return x - resid / pdf;
}

}  // namespace detail

inline double std_cdf(double z, DistributionFamily family) {
  detail::require_finite(z, "std_cdf");
  if (family == DistributionFamily::Lognormal) return 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return -std::expm1(-std::exp(z));
}

inline double std_log_pdf(double z, DistributionFamily family) {
  detail::require_finite(z, "std_log_pdf");
  if (family == DistributionFamily::Lognormal) return -0.5 * z * z - detail::kLogSqrt2Pi;
  return z - std::exp(z);
}

inline double std_pdf(double z, DistributionFamily family) {
  return std::exp(std_log_pdf(z, family));
}

// log(1 - F(z)), accurate deep into the upper tail.
inline double std_log_survival(double z, DistributionFamily family) {
  detail::require_finite(z, "std_log_survival");
  if (family == DistributionFamily::Lognormal) return detail::normal_log_survival(z);
  return -std::exp(z);
}

inline double std_survival(double z, DistributionFamily family) {
  return std::exp(std_log_survival(z, family));
}

// f(z) / (1 - F(z))
inline double std_hazard(double z, DistributionFamily family) {
  if (family == DistributionFamily::Weibull) {
    detail::require_finite(z, "std_hazard");
    return std::exp(z);
  }
  return std::exp(std_log_pdf(z, family) - std_log_survival(z, family));
}

// d/dz log f(z)
inline double std_score(double z, DistributionFamily family) {
  return family == DistributionFamily::Lognormal ? -z : 1.0 - std::exp(z);
}

inline double std_quantile(double p, DistributionFamily family) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("std_quantile: p must lie in (0, 1)");
  if (family == DistributionFamily::Lognormal) return detail::normal_quantile(p);
  return std::log(-std::log1p(-p));
}

}  // namespace seqalt
