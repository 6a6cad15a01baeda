#pragma once

// Bayesian C- and D-optimal selection of the next test stress, and the
// dual-objective schedule that switches from D to C after N1 runs.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "seqalt/errors.hpp"
#include "seqalt/fatigue_model.hpp"
#include "seqalt/fisher_info.hpp"
#include "seqalt/likelihood.hpp"
#include "seqalt/posterior.hpp"
#include "seqalt/rng.hpp"

namespace seqalt {

// Use-condition stresses as fractions of sigma_ult, with their frequencies.
struct UseProfile {
  std::vector<double> q;
  std::vector<double> weights;

  bool operator==(const UseProfile&) const = default;
};

inline constexpr double kUseBandLo = 0.05;
inline constexpr double kUseBandHi = 0.25;

inline void validate(const UseProfile& profile) {
  if (profile.q.empty() || profile.q.size() != profile.weights.size())
    throw ValidationError("UseProfile: need matching, nonempty level and weight lists");
  double total = 0.0;
  for (std::size_t k = 0; k < profile.q.size(); ++k) {
    if (profile.q[k] < kUseBandLo - 1e-12 || profile.q[k] > kUseBandHi + 1e-12)
      throw ValidationError("UseProfile: use levels must lie in [0.05, 0.25] of sigma_ult");
    if (k > 0 && !(profile.q[k] > profile.q[k - 1]))
      throw ValidationError("UseProfile: use levels must be strictly increasing");
    if (!(profile.weights[k] >= 0.0)) throw ValidationError("UseProfile: weights must be nonnegative");
    total += profile.weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("UseProfile: weights must sum to 1");
}

// Uniform weights over q = 0.05, 0.06, ..., 0.25.
inline UseProfile default_use_profile() {
  UseProfile p;
  for (int i = 5; i <= 25; ++i) p.q.push_back(i / 100.0);
  p.weights.assign(p.q.size(), 1.0 / static_cast<double>(p.q.size()));
  return p;
}

// Admissible test stresses as fractions of sigma_ult.
struct CandidateSet {
  std::vector<double> q;

  bool operator==(const CandidateSet&) const = default;
};

inline void validate(const CandidateSet& c) {
  if (c.q.empty()) throw ValidationError("CandidateSet: no candidates");
  for (std::size_t i = 0; i < c.q.size(); ++i) {
    if (!(c.q[i] > 0.0 && c.q[i] < 1.0)) throw ValidationError("CandidateSet: fractions must lie in (0, 1)");
    if (i > 0 && !(c.q[i] > c.q[i - 1])) throw ValidationError("CandidateSet: fractions must be strictly increasing");
  }
}

// q = 0.35, 0.40, ..., 0.75
inline CandidateSet default_candidates() {
  CandidateSet c;
  for (int i = 35; i <= 75; i += 5) c.q.push_back(i / 100.0);
  return c;
}

enum class Criterion { BayesC, BayesD };

inline std::string_view to_string(Criterion c) { return c == Criterion::BayesC ? "BayesC" : "BayesD"; }

inline Criterion criterion_from_string(std::string_view s) {
  if (s == "BayesC") return Criterion::BayesC;
  if (s == "BayesD") return Criterion::BayesD;
  throw ValidationError("unknown criterion '" + std::string(s) + "'");
}

// N sequential runs; the first N1 are D-optimal, the rest C-optimal.
struct Schedule {
  int N = 12;
  int N1 = 0;

  // run is 1-based
  Criterion criterion_at(int run) const { return run <= N1 ? Criterion::BayesD : Criterion::BayesC; }
  bool operator==(const Schedule&) const = default;
};

inline void validate(const Schedule& s) {
  if (s.N < 1 || s.N1 < 0 || s.N1 > s.N) throw ValidationError("Schedule: need N >= 1 and 0 <= N1 <= N");
}

struct HistoryEntry {
  int run = 0;
  Criterion criterion = Criterion::BayesC;
  double q = 0.0;
  double x = 0.0;
  double value = 0.0;

  bool operator==(const HistoryEntry&) const = default;
};

struct DesignSession {
  TestConfig cfg;
  PriorSpec prior;
  UseProfile profile = default_use_profile();
  CandidateSet candidates = default_candidates();
  Schedule schedule;
  Dataset observations;
  std::vector<HistoryEntry> history;
  std::uint64_t seed = 0;
  McmcSettings mcmc;
  std::vector<std::string> warnings;

  bool operator==(const DesignSession&) const = default;
};

inline void validate(const DesignSession& s) {
  validate(s.cfg);
  validate(s.prior);
  validate(s.profile);
  validate(s.candidates);
  validate(s.schedule);
  validate(s.mcmc);
  for (const auto& obs : s.observations) validate(obs, s.cfg);
  if (static_cast<int>(s.history.size()) > s.schedule.N)
    throw ValidationError("DesignSession: history longer than the schedule");
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const auto& h = s.history[i];
    if (h.run != static_cast<int>(i) + 1) throw ValidationError("DesignSession: history runs must be 1, 2, ...");
    if (h.criterion != s.schedule.criterion_at(h.run))
      throw ValidationError("DesignSession: history criterion disagrees with the schedule at run " +
                            std::to_string(h.run));
  }
}

// Gradient of log quantile life at x_use with respect to (A, B, nu).
inline Eigen::Vector3d c_vector(const ModelParams& theta, double x_use, const TestConfig& cfg) {
  const MuGradient g = mu_grad(x_use, theta.A, theta.B, cfg);
  return {g.dA, g.dB, std_quantile(cfg.p, cfg.family)};
}

namespace detail {

// sum_k w_k c_k c_k', so that the weighted AVar equals trace(Sigma * C).
inline Eigen::Matrix3d weighted_c_outer(const ModelParams& theta, const UseProfile& profile, const TestConfig& cfg) {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < profile.q.size(); ++k) {
    const Eigen::Vector3d c = c_vector(theta, profile.q[k] * cfg.sigma_ult, cfg);
    C += profile.weights[k] * c * c.transpose();
  }
  return C;
}

}  // namespace detail

struct AvarResult {
  double value = 0.0;
  double ridge = 0.0;
};

inline double weighted_avar(const ModelParams& theta, const CovMatrix& sigma, const UseProfile& profile,
                            const TestConfig& cfg) {
  double v = 0.0;
  for (std::size_t k = 0; k < profile.q.size(); ++k) {
    const Eigen::Vector3d c = c_vector(theta, profile.q[k] * cfg.sigma_ult, cfg);
    v += profile.weights[k] * c.dot(sigma.entries * c);
  }
  return v;
}

inline AvarResult weighted_avar_detail(const ModelParams& theta, const std::vector<double>& design_stresses,
                                       const UseProfile& profile, const TestConfig& cfg) {
  const CovMatrix sigma = invert_info(total_info(theta, design_stresses, cfg));
  return {weighted_avar(theta, sigma, profile, cfg), sigma.ridge};
}

// sum_k w_k c_k' Sigma c_k with Sigma the inverse information of the design.
inline double weighted_avar(const ModelParams& theta, const std::vector<double>& design_stresses,
                            const UseProfile& profile, const TestConfig& cfg) {
  return weighted_avar_detail(theta, design_stresses, profile, cfg).value;
}

struct CandidateScore {
  double q = 0.0;
  double x = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();  // NaN when every draw was skipped
  int skipped = 0;
  bool unreliable = false;  // more than 10% of draws skipped
};

struct CriterionTable {
  Criterion criterion = Criterion::BayesC;
  int draws = 0;
  std::vector<CandidateScore> rows;
};

inline std::vector<double> observed_stresses(const DesignSession& session) {
  std::vector<double> xs;
  xs.reserve(session.observations.size());
  for (const auto& obs : session.observations) xs.push_back(obs.x);
  return xs;
}

// Posterior-averaged criterion at every candidate. C: mean of the weighted
// AVar of the augmented design; D: mean log-determinant of the augmented
// information. Per-draw failures are skipped and counted.
inline CriterionTable evaluate_criterion(Criterion criterion, const std::vector<double>& candidate_stresses,
                                         const PosteriorDraws& draws, const DesignSession& session) {
  if (draws.draws.empty()) throw CriterionError("criterion: posterior draws are empty");
  const auto& cfg = session.cfg;
  const std::vector<double> xs = observed_stresses(session);
  const std::size_t nc = candidate_stresses.size();

  std::vector<double> sums(nc, 0.0);
  std::vector<int> skipped(nc, 0);
  for (const auto& theta : draws.draws) {
    InfoMatrix In = InfoMatrix::Zero();
    Eigen::Matrix3d C;
    try {
      for (double x : xs) In += unit_info(theta, x, cfg);
      if (criterion == Criterion::BayesC) C = detail::weighted_c_outer(theta, session.profile, cfg);
    } catch (const Error&) {
      for (auto& s : skipped) ++s;
      continue;
    }
    for (std::size_t j = 0; j < nc; ++j) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        const InfoMatrix I = In + unit_info(theta, candidate_stresses[j], cfg);
        if (criterion == Criterion::BayesC) {
          v = (invert_info(I).entries * C).trace();
        } else {
          v = log_det(I);
        }
      } catch (const Error&) {
      }
      if (std::isfinite(v)) {
        sums[j] += v;
      } else {
        ++skipped[j];
      }
    }
  }

  CriterionTable table;
  table.criterion = criterion;
  table.draws = static_cast<int>(draws.draws.size());
  for (std::size_t j = 0; j < nc; ++j) {
    CandidateScore row;
    row.x = candidate_stresses[j];
    row.q = candidate_stresses[j] / cfg.sigma_ult;
    row.skipped = skipped[j];
    const int used = table.draws - skipped[j];
    if (used > 0) row.value = sums[j] / used;
    row.unreliable = skipped[j] > 0.1 * table.draws;
    table.rows.push_back(row);
  }
  return table;
}

inline double bayes_c_criterion(double x_next, const PosteriorDraws& draws, const DesignSession& session) {
  const auto t = evaluate_criterion(Criterion::BayesC, {x_next}, draws, session);
  if (!std::isfinite(t.rows[0].value)) throw CriterionError("BayesC criterion undefined at every draw");
  return t.rows[0].value;
}

inline double bayes_d_criterion(double x_next, const PosteriorDraws& draws, const DesignSession& session) {
  const auto t = evaluate_criterion(Criterion::BayesD, {x_next}, draws, session);
  if (!std::isfinite(t.rows[0].value)) throw CriterionError("BayesD criterion undefined at every draw");
  return t.rows[0].value;
}

// Index of the best finite value (argmin for C, argmax for D). Candidates are
// ordered by increasing stress, so the first best wins ties. -1 if none.
inline int select_candidate(Criterion criterion, const std::vector<double>& values) {
  int best = -1;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) continue;
    if (best < 0) {
      best = static_cast<int>(j);
      continue;
    }
    const bool better = criterion == Criterion::BayesC ? values[j] < values[best] : values[j] > values[best];
    if (better) best = static_cast<int>(j);
  }
  return best;
}

struct Recommendation {
  int run = 0;
  Criterion criterion = Criterion::BayesC;
  double q = 0.0;
  double x = 0.0;
  double value = 0.0;
  CriterionTable table;
};

// Scores every candidate with the criterion scheduled for the next run,
// appends the choice to the session history and returns it.
inline Recommendation next_point(DesignSession& session, const PosteriorDraws& draws) {
  validate(session);
  const int run = static_cast<int>(session.history.size()) + 1;
  if (run > session.schedule.N)
    throw CampaignCompleteError("campaign complete: all " + std::to_string(session.schedule.N) +
                                " scheduled runs have been recommended");
  const Criterion crit = session.schedule.criterion_at(run);
  std::vector<double> xs;
  for (double q : session.candidates.q) xs.push_back(q * session.cfg.sigma_ult);

  Recommendation rec;
  rec.run = run;
  rec.criterion = crit;
  rec.table = evaluate_criterion(crit, xs, draws, session);
  std::vector<double> values;
  for (const auto& r : rec.table.rows) values.push_back(r.value);
  const int best = select_candidate(crit, values);
  if (best < 0) throw PlanningError("next_point: criterion undefined at every candidate");
  rec.q = rec.table.rows[best].q;
  rec.x = rec.table.rows[best].x;
  rec.value = rec.table.rows[best].value;
  session.history.push_back({run, crit, rec.q, rec.x, rec.value});
  return rec;
}

// Posterior sampling followed by next_point. The chain seed depends only on
// `seed` and the run index.
inline Recommendation recommend_next(DesignSession& session, std::uint64_t seed,
                                     PosteriorDraws* draws_out = nullptr) {
  validate(session);
  if (static_cast<int>(session.history.size()) >= session.schedule.N)
    throw CampaignCompleteError("campaign complete: all " + std::to_string(session.schedule.N) +
                                " scheduled runs have been recommended");
  const auto run = static_cast<std::uint64_t>(session.history.size() + 1);
  PosteriorDraws draws =
      sample_posterior(session.observations, session.prior, session.cfg, session.mcmc, derive_seed(seed, {run}));
  Recommendation rec = next_point(session, draws);
  if (draws_out) *draws_out = std::move(draws);
  return rec;
}

struct RecordOutcome {
  bool stress_deviation = false;
  std::string warning;
};

// Appends a tested unit. A stress that differs from the latest
// recommendation is accepted but noted in session.warnings.
inline RecordOutcome record_observation(DesignSession& session, const Observation& obs) {
  validate(obs, session.cfg);
  RecordOutcome out;
  if (!session.history.empty()) {
    const double rec_x = session.history.back().x;
    if (std::abs(obs.x - rec_x) > 1e-9 * session.cfg.sigma_ult) {
      std::ostringstream msg;
      msg << "observation " << session.observations.size() + 1 << " tested at x=" << obs.x
          << " but run " << session.history.back().run << " recommended x=" << rec_x;
      out.stress_deviation = true;
      out.warning = msg.str();
      session.warnings.push_back(out.warning);
    }
  }
  session.observations.push_back(obs);
  return out;
}

}  // namespace seqalt
