#pragma once

// Censored-data likelihood for the stress-life model and its maximum
// likelihood fit.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "seqalt/distributions.hpp"
#include "seqalt/errors.hpp"
#include "seqalt/fatigue_model.hpp"
#include "seqalt/nelder_mead.hpp"

namespace seqalt {

// One tested unit. delta = 1 marks a unit still running at the horizon.
struct Observation {
  double x = 0.0;
  double t = 0.0;
  int delta = 0;

  bool operator==(const Observation&) const = default;
};

using Dataset = std::vector<Observation>;

inline void validate(const Observation& obs, const TestConfig& cfg) {
  if (!(obs.x > 0.0) || !(obs.x < cfg.sigma_ult))
    throw ValidationError("observation stress must satisfy 0 < x < sigma_ult");
  if (!(obs.t > 0.0) || !std::isfinite(obs.t)) throw ValidationError("observation time must be positive");
  if (obs.delta != 0 && obs.delta != 1) throw ValidationError("censoring indicator must be 0 or 1");
}

namespace detail {

// Contribution of one unit given its location mu; no validation.
inline double unit_log_likelihood(const Observation& obs, double mu_x, double nu,
                                  DistributionFamily family) {
  const double log_t = std::log(obs.t);
  const double z = (log_t - mu_x) / nu;
  if (obs.delta == 1) return std_log_survival(z, family);
  return std_log_pdf(z, family) - std::log(nu) - log_t;
}

inline double log_likelihood_unchecked(const ModelParams& theta, const Dataset& data,
                                       const TestConfig& cfg) {
  double ll = 0.0;
  for (const auto& obs : data) {
    const double m = std::log1p(growth_term(obs.x, theta.A, theta.B, cfg)) / theta.B;
    ll += unit_log_likelihood(obs, m, theta.nu, cfg.family);
  }
  return ll;
}

}  // namespace detail

inline double log_likelihood(const ModelParams& theta, const Dataset& data, const TestConfig& cfg) {
  validate(theta);
  for (const auto& obs : data) validate(obs, cfg);
  return detail::log_likelihood_unchecked(theta, data, cfg);
}

struct ParamBounds {
  double A_lo = 1e-4, A_hi = 1e-2;
  double B_lo = 0.05, B_hi = 1.5;
  double nu_lo = 1e-3, nu_hi = 10.0;

  bool contains(const ModelParams& th) const {
    return th.A >= A_lo && th.A <= A_hi && th.B >= B_lo && th.B <= B_hi && th.nu >= nu_lo &&
           th.nu <= nu_hi;
  }
  bool operator==(const ParamBounds&) const = default;
};

inline void validate(const ParamBounds& b) {
  if (!(b.A_lo > 0.0 && b.A_lo < b.A_hi) || !(b.B_lo > 0.0 && b.B_lo < b.B_hi) ||
      !(b.nu_lo > 0.0 && b.nu_lo < b.nu_hi))
    throw ValidationError("parameter bounds must be positive, ordered intervals");
}

struct FitOptions {
  int starts = 10;
  SimplexOptions simplex{};
};

struct FitReport {
  ModelParams theta;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int iterations = 0;   // summed over starts
  int best_start = -1;
  bool converged = false;  // best start reached the simplex tolerance
  bool boundary_hit = false;
};

namespace detail {

inline double radical_inverse(unsigned index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace detail

// Multi-start simplex maximization of the log-likelihood in
// (log A, log B, log nu), restricted to the box `bounds`. Starts are the
// first Halton points (bases 2, 3, 5) mapped onto the log-box.
inline FitReport fit_mle(const Dataset& data, const TestConfig& cfg, const ParamBounds& bounds,
                         const FitOptions& opt = {}) {
  validate(cfg);
  validate(bounds);
  if (data.size() < 3) throw InsufficientDataError("fit_mle: need at least 3 observations");
  std::set<double> levels;
  int failures = 0;
  for (const auto& obs : data) {
    validate(obs, cfg);
    levels.insert(obs.x);
    failures += obs.delta == 0;
  }
  if (levels.size() < 2) throw InsufficientDataError("fit_mle: need at least 2 distinct stress levels");
  if (failures == 0) throw EstimationError("fit_mle: all observations censored; likelihood has no maximum");

  const Point<3> lo{std::log(bounds.A_lo), std::log(bounds.B_lo), std::log(bounds.nu_lo)};
  const Point<3> hi{std::log(bounds.A_hi), std::log(bounds.B_hi), std::log(bounds.nu_hi)};

  auto to_params = [](const Point<3>& u) {
    return ModelParams{std::exp(u[0]), std::exp(u[1]), std::exp(u[2])};
  };
  auto objective = [&](const Point<3>& u) {
    for (int k = 0; k < 3; ++k)
      if (u[k] < lo[k] || u[k] > hi[k]) return std::numeric_limits<double>::infinity();
    const double ll = detail::log_likelihood_unchecked(to_params(u), data, cfg);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };

  static constexpr unsigned kBases[3] = {2, 3, 5};
  FitReport best;
  double best_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.starts; ++s) {
    std::array<Point<3>, 4> simplex;
    for (int k = 0; k < 3; ++k)
      simplex[0][k] = lo[k] + detail::radical_inverse(static_cast<unsigned>(s + 1), kBases[k]) * (hi[k] - lo[k]);
    for (int v = 1; v <= 3; ++v) {
      simplex[v] = simplex[0];
      const int k = v - 1;
      const double step = 0.1 * (hi[k] - lo[k]);
      simplex[v][k] += (simplex[0][k] + step <= hi[k]) ? step : -step;
    }
    const auto r = nelder_mead<3>(objective, simplex, opt.simplex);
    best.iterations += r.iterations;
    if (r.value < best_value) {  // strict: ties keep the lowest start index
      best_value = r.value;
      best.theta = to_params(r.x);
      best.best_start = s;
      best.converged = r.converged;
      best.boundary_hit = false;
      for (int k = 0; k < 3; ++k)
        if (r.x[k] - lo[k] < 1e-6 * (hi[k] - lo[k]) || hi[k] - r.x[k] < 1e-6 * (hi[k] - lo[k]))
          best.boundary_hit = true;
    }
  }
  if (!std::isfinite(best_value)) throw EstimationError("fit_mle: no start produced a finite likelihood");
  // exp(log(bound)) can round just outside the box
  best.theta.A = std::clamp(best.theta.A, bounds.A_lo, bounds.A_hi);
  best.theta.B = std::clamp(best.theta.B, bounds.B_lo, bounds.B_hi);
  best.theta.nu = std::clamp(best.theta.nu, bounds.nu_lo, bounds.nu_hi);
  best.log_likelihood = detail::log_likelihood_unchecked(best.theta, data, cfg);
  return best;
}

}  // namespace seqalt
