#pragma once

// Prior and random-walk Metropolis sampler for pi(A, B, nu | data).
//
// Prior: A ~ Uniform(a1, a2), B ~ Uniform(b1, b2), nu^2 ~ InvGamma(kappa, gamma).
// The chain moves componentwise on (A, B, log nu).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "seqalt/errors.hpp"
#include "seqalt/fatigue_model.hpp"
#include "seqalt/likelihood.hpp"

namespace seqalt {

struct PriorSpec {
  double A_lo = 1e-4, A_hi = 1e-2;
  double B_lo = 0.05, B_hi = 1.5;
  double nu2_shape = 3.0;  // kappa
  double nu2_scale = 1.0;  // inverse-gamma scale

  bool operator==(const PriorSpec&) const = default;
};

inline void validate(const PriorSpec& prior) {
  if (!(prior.A_lo > 0.0 && prior.A_lo < prior.A_hi) || !(prior.B_lo > 0.0 && prior.B_lo < prior.B_hi))
    throw ValidationError("PriorSpec: ranges of A and B must be positive, ordered intervals");
  if (!(prior.nu2_shape > 0.0) || !(prior.nu2_scale > 0.0))
    throw ValidationError("PriorSpec: inverse-gamma shape and scale must be positive");
}

// ML search box sharing the prior's support for (A, B).
inline ParamBounds default_bounds(const PriorSpec& prior) {
  ParamBounds b;
  b.A_lo = prior.A_lo;
  b.A_hi = prior.A_hi;
  b.B_lo = prior.B_lo;
  b.B_hi = prior.B_hi;
  return b;
}

inline bool in_support(const ModelParams& th, const PriorSpec& prior) {
  return th.A >= prior.A_lo && th.A <= prior.A_hi && th.B >= prior.B_lo && th.B <= prior.B_hi &&
         th.nu > 0.0 && std::isfinite(th.nu);
}

// Log prior density of (A, B, nu); the inverse-gamma density of nu^2 carries
// the Jacobian |d nu^2 / d nu| = 2 nu.
inline double log_prior(const ModelParams& th, const PriorSpec& prior) {
  if (!in_support(th, prior)) return -std::numeric_limits<double>::infinity();
  const double k = prior.nu2_shape;
  const double g = prior.nu2_scale;
  const double nu2 = th.nu * th.nu;
  return -std::log(prior.A_hi - prior.A_lo) - std::log(prior.B_hi - prior.B_lo) + k * std::log(g) -
         std::lgamma(k) - (k + 1.0) * std::log(nu2) - g / nu2 + std::log(2.0 * th.nu);
}

inline double log_posterior_unnorm(const ModelParams& th, const Dataset& data, const PriorSpec& prior,
                                   const TestConfig& cfg) {
  const double lp = log_prior(th, prior);
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
  const double ll = detail::log_likelihood_unchecked(th, data, cfg);
  if (std::isnan(ll)) return -std::numeric_limits<double>::infinity();
  return lp + ll;
}

struct McmcSettings {
  int length = 11000;
  int burn_in = 1000;
  int thin = 10;
  int adapt_interval = 50;
  std::optional<ModelParams> initial;  // chain start; otherwise ML fit or prior centre

  bool operator==(const McmcSettings&) const = default;
};

inline void validate(const McmcSettings& s) {
  if (s.length <= 0 || s.burn_in < 0 || s.thin <= 0 || s.adapt_interval <= 0 || s.burn_in >= s.length)
    throw ValidationError("McmcSettings: need length > burn_in >= 0, thin > 0 and adapt_interval > 0");
}

struct PosteriorDraws {
  std::vector<ModelParams> draws;
  double acceptance_rate = 0.0;  // post burn-in, over all component updates
  int length = 0;
  int burn_in = 0;
  int thin = 0;
  std::array<double, 3> proposal_scales{};  // (A, B, log nu) after adaptation
};

// One Metropolis update of a single coordinate. `log_target` is evaluated at
// the proposed value; `current_log_target` is updated on acceptance.
template <typename LogTarget, typename Rng>
bool metropolis_update(double& value, double& current_log_target, double scale, LogTarget&& log_target,
                       Rng& rng) {
  std::normal_distribution<double> step(0.0, scale);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double proposal = value + step(rng);
  const double lt = log_target(proposal);
  if (std::isfinite(lt) && std::log(unif(rng)) < lt - current_log_target) {
    value = proposal;
    current_log_target = lt;
    return true;
  }
  return false;
}

namespace detail {

inline ModelParams prior_centre(const PriorSpec& prior) {
  return {0.5 * (prior.A_lo + prior.A_hi), 0.5 * (prior.B_lo + prior.B_hi),
          std::sqrt(prior.nu2_scale / (prior.nu2_shape + 1.0))};
}

inline ModelParams chain_start(const Dataset& data, const PriorSpec& prior, const TestConfig& cfg,
                               const McmcSettings& s) {
  if (s.initial && in_support(*s.initial, prior)) return *s.initial;
  if (!data.empty()) {
    try {
      const auto fit = fit_mle(data, cfg, default_bounds(prior), FitOptions{4, {}});
      if (in_support(fit.theta, prior)) return fit.theta;
    } catch (const Error&) {
      // too little data to fit; fall through
    }
  }
  return prior_centre(prior);
}

}  // namespace detail

inline PosteriorDraws sample_posterior(const Dataset& data, const PriorSpec& prior, const TestConfig& cfg,
                                       const McmcSettings& settings, std::uint64_t seed) {
  validate(prior);
  validate(cfg);
  validate(settings);
  for (const auto& obs : data) validate(obs, cfg);

  std::mt19937_64 rng(seed);
  ModelParams start = detail::chain_start(data, prior, cfg, settings);
  std::array<double, 3> u{start.A, start.B, std::log(start.nu)};

  auto log_target = [&](const std::array<double, 3>& v) {
    const ModelParams th{v[0], v[1], std::exp(v[2])};
    return log_posterior_unnorm(th, data, prior, cfg) + v[2];  // + log |d nu / d log nu|
  };
  double current = log_target(u);
  if (!std::isfinite(current)) {
    start = detail::prior_centre(prior);
    u = {start.A, start.B, std::log(start.nu)};
    current = log_target(u);
    if (!std::isfinite(current)) throw SamplerError("sample_posterior: no finite starting point");
  }

  std::array<double, 3> scale{(prior.A_hi - prior.A_lo) / 20.0, (prior.B_hi - prior.B_lo) / 20.0, 0.2};
  std::array<int, 3> window_accepts{};
  long long kept_accepts = 0, kept_proposals = 0;

  PosteriorDraws out;
  out.length = settings.length;
  out.burn_in = settings.burn_in;
  out.thin = settings.thin;
  out.draws.reserve(static_cast<std::size_t>((settings.length - settings.burn_in) / settings.thin));

  for (int it = 0; it < settings.length; ++it) {
    for (int k = 0; k < 3; ++k) {
      auto coord_target = [&](double value) {
        auto v = u;
        v[k] = value;
        return log_target(v);
      };
      const bool acc = metropolis_update(u[k], current, scale[k], coord_target, rng);
      if (it < settings.burn_in) {
        window_accepts[k] += acc;
      } else {
        kept_accepts += acc;
        ++kept_proposals;
      }
    }
    if (it < settings.burn_in && (it + 1) % settings.adapt_interval == 0) {
      for (int k = 0; k < 3; ++k) {
        const double rate = static_cast<double>(window_accepts[k]) / settings.adapt_interval;
        if (rate < 0.2) scale[k] *= rate < 0.05 ? 0.5 : 0.75;
        else if (rate > 0.45) scale[k] *= rate > 0.7 ? 2.0 : 1.33;
        window_accepts[k] = 0;
      }
    }
    if (it >= settings.burn_in && (it - settings.burn_in + 1) % settings.thin == 0)
      out.draws.push_back({u[0], u[1], std::exp(u[2])});
  }

  out.proposal_scales = scale;
  out.acceptance_rate = kept_proposals ? static_cast<double>(kept_accepts) / kept_proposals : 0.0;
  if (out.draws.empty()) throw SamplerError("sample_posterior: no draws retained after burn-in and thinning");
  if (out.acceptance_rate < 0.01) {
    std::ostringstream msg;
    msg << "sample_posterior: acceptance rate " << out.acceptance_rate << " below 0.01 (scales " << scale[0]
        << ", " << scale[1] << ", " << scale[2] << ")";
    throw SamplerError(msg.str());
  }
  return out;
}

}  // namespace seqalt
