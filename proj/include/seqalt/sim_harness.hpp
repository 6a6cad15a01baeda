#pragma once

// Simulation study comparing sequential design strategies: repeated
// campaigns under a known truth, with plug-in AVar, the M-measure of
// parameter precision and allocation summaries per strategy.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "seqalt/design.hpp"
#include "seqalt/errors.hpp"
#include "seqalt/likelihood.hpp"
#include "seqalt/posterior.hpp"
#include "seqalt/rng.hpp"

namespace seqalt {

struct InitialLevel {
  double q = 0.0;
  int count = 1;

  bool operator==(const InitialLevel&) const = default;
};

struct TruthSpec {
  ModelParams theta{0.00157, 0.3188, 0.7259};
  std::vector<InitialLevel> initial_design{{0.45, 1}, {0.55, 1}, {0.65, 1}};
  Dataset initial_data;  // used verbatim instead of simulating when nonempty

  bool operator==(const TruthSpec&) const = default;
};

struct StrategySpec {
  std::string label;
  Schedule schedule;

  bool operator==(const StrategySpec&) const = default;
};

// The five strategies compared in the study: all-C, all-D, and D-then-C
// splits with 6, 4 and 2 initial D-optimal runs.
inline std::vector<StrategySpec> default_strategies(int N = 12) {
  return {{"a: 12 C-opt", {N, 0}},
          {"b: 12 D-opt", {N, N}},
          {"c: 6 D-opt + 6 C-opt", {N, 6}},
          {"d: 4 D-opt + 8 C-opt", {N, 4}},
          {"e: 2 D-opt + 10 C-opt", {N, 2}}};
}

struct StudyConfig {
  TestConfig cfg;
  PriorSpec prior;
  UseProfile profile = default_use_profile();
  CandidateSet candidates = default_candidates();
  TruthSpec truth;
  std::vector<StrategySpec> strategies = default_strategies();
  int trials = 20;
  McmcSettings mcmc;
  std::uint64_t seed = 20190601;
  int threads = 0;  // 0: hardware concurrency

  bool operator==(const StudyConfig&) const = default;
};

inline void validate(const StudyConfig& sc) {
  validate(sc.cfg);
  validate(sc.prior);
  validate(sc.profile);
  validate(sc.candidates);
  validate(sc.mcmc);
  validate(sc.truth.theta);
  if (sc.trials < 1) throw ValidationError("study: trials must be >= 1");
  if (sc.strategies.empty()) throw ValidationError("study: no strategies");
  for (std::size_t i = 0; i < sc.strategies.size(); ++i) {
    validate(sc.strategies[i].schedule);
    for (std::size_t j = 0; j < i; ++j)
      if (sc.strategies[j].label == sc.strategies[i].label)
        throw ValidationError("study: duplicate strategy label '" + sc.strategies[i].label + "'");
  }
  int n0 = static_cast<int>(sc.truth.initial_data.size());
  if (n0 == 0)
    for (const auto& lvl : sc.truth.initial_design) {
      if (!(lvl.q > 0.0 && lvl.q < 1.0) || lvl.count < 0) throw ValidationError("study: bad initial design level");
      n0 += lvl.count;
    }
  if (n0 < 3) throw ValidationError("study: the initial design must yield at least 3 observations");
}

// Failure time at stress x under theta, censored at cfg.censor_time.
// nu = 0 gives the deterministic life exp(mu(x)).
template <typename Rng>
Observation simulate_lifetime(const ModelParams& theta, double x, const TestConfig& cfg, Rng& rng) {
  if (!(theta.nu >= 0.0)) throw DomainError("simulate_lifetime: nu must be nonnegative");
  const double m = mu(x, theta.A, theta.B, cfg);
  double z;
  if (cfg.family == DistributionFamily::Lognormal) {
    z = std::normal_distribution<double>(0.0, 1.0)(rng);
  } else {
    // inversion; uniform on the open interval
    double u;
    do u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    while (u <= 0.0);
    z = std_quantile(u, cfg.family);
  }
  const double t = std::exp(m + theta.nu * z);
  if (t > cfg.censor_time) return {x, cfg.censor_time, 1};
  return {x, t, 0};
}

enum RunFlag : unsigned {
  kFlagMleFailed = 1u,      // AVar used the posterior-mean plug-in
  kFlagRidge = 2u,          // information matrix needed diagonal loading
  kFlagMleBoundary = 4u,    // ML estimate on the search box boundary
  kFlagUnreliable = 8u,     // chosen candidate skipped > 10% of draws
};

struct RunRecord {
  int run = 0;
  Criterion criterion = Criterion::BayesC;
  double q = 0.0;
  Observation obs;
  ModelParams theta_hat;
  double avar = 0.0;
  unsigned flags = 0;
};

struct TrialRecord {
  Dataset initial;
  std::vector<RunRecord> runs;
};

inline DesignSession session_template(const StudyConfig& sc) {
  DesignSession s;
  s.cfg = sc.cfg;
  s.prior = sc.prior;
  s.profile = sc.profile;
  s.candidates = sc.candidates;
  s.mcmc = sc.mcmc;
  s.seed = sc.seed;
  return s;
}

// One simulated campaign. All randomness derives from `seed`.
inline TrialRecord run_trial(const StrategySpec& strategy, const TruthSpec& truth, const DesignSession& templ,
                             std::uint64_t seed) {
  DesignSession session = templ;
  session.schedule = strategy.schedule;
  session.history.clear();
  session.warnings.clear();
  session.observations.clear();

  std::mt19937_64 rng(derive_seed(seed, {0}));
  if (!truth.initial_data.empty()) {
    session.observations = truth.initial_data;
  } else {
    for (const auto& lvl : truth.initial_design)
      for (int i = 0; i < lvl.count; ++i)
        session.observations.push_back(simulate_lifetime(truth.theta, lvl.q * templ.cfg.sigma_ult, templ.cfg, rng));
  }

  TrialRecord trial;
  trial.initial = session.observations;
  const ParamBounds bounds = default_bounds(session.prior);
  std::optional<ModelParams> current_fit;
  try {
    current_fit = fit_mle(session.observations, session.cfg, bounds).theta;
  } catch (const Error&) {
  }

  for (int run = 1; run <= strategy.schedule.N; ++run) {
    session.mcmc.initial = current_fit;
    PosteriorDraws draws = sample_posterior(session.observations, session.prior, session.cfg, session.mcmc,
                                            derive_seed(seed, {1, static_cast<std::uint64_t>(run)}));
    const Recommendation rec = next_point(session, draws);
    RunRecord r;
    r.run = run;
    r.criterion = rec.criterion;
    r.q = rec.q;
    for (const auto& row : rec.table.rows)
      if (row.x == rec.x && row.unreliable) r.flags |= kFlagUnreliable;
    r.obs = simulate_lifetime(truth.theta, rec.x, session.cfg, rng);
    record_observation(session, r.obs);

    try {
      const FitReport fit = fit_mle(session.observations, session.cfg, bounds);
      r.theta_hat = fit.theta;
      if (fit.boundary_hit) r.flags |= kFlagMleBoundary;
      current_fit = fit.theta;
    } catch (const Error&) {
      ModelParams mean{0.0, 0.0, 0.0};
      for (const auto& d : draws.draws) {
        mean.A += d.A;
        mean.B += d.B;
        mean.nu += d.nu;
      }
      const double n = static_cast<double>(draws.draws.size());
      r.theta_hat = {mean.A / n, mean.B / n, mean.nu / n};
      r.flags |= kFlagMleFailed;
    }
    const AvarResult av = weighted_avar_detail(r.theta_hat, observed_stresses(session), session.profile, session.cfg);
    r.avar = av.value;
    if (av.ridge > 0.0) r.flags |= kFlagRidge;
    trial.runs.push_back(r);
  }
  return trial;
}

// Total relative mean squared error of (A, B, nu) over trials.
inline double m_measure(const std::vector<ModelParams>& estimates, const ModelParams& truth) {
  if (estimates.empty()) throw ValidationError("m_measure: no estimates");
  if (truth.A == 0.0 || truth.B == 0.0 || truth.nu == 0.0)
    throw DomainError("m_measure: true parameter components must be nonzero");
  double mA = 0.0, mB = 0.0, mN = 0.0;
  for (const auto& e : estimates) {
    mA += std::pow((e.A - truth.A) / truth.A, 2);
    mB += std::pow((e.B - truth.B) / truth.B, 2);
    mN += std::pow((e.nu - truth.nu) / truth.nu, 2);
  }
  const double K = static_cast<double>(estimates.size());
  return mA / K + mB / K + mN / K;
}

struct StrategySummary {
  std::string label;
  std::vector<double> mean_avar;  // per run
  std::vector<double> se_avar;
  std::vector<double> m;
  std::vector<double> allocation;                       // per candidate
  std::vector<std::vector<double>> per_run_allocation;  // [run][candidate]
  int flagged_runs = 0;
};

struct StudyResult {
  std::vector<double> candidate_q;
  std::vector<std::string> labels;
  std::vector<std::vector<TrialRecord>> trials;  // [strategy][trial]
  std::vector<StrategySummary> summaries;
};

inline StrategySummary summarize(const std::string& label, const std::vector<TrialRecord>& trials,
                                 const std::vector<double>& candidate_q, const ModelParams& truth) {
  StrategySummary s;
  s.label = label;
  const std::size_t N = trials.front().runs.size();
  const std::size_t nc = candidate_q.size();
  const double K = static_cast<double>(trials.size());
  s.allocation.assign(nc, 0.0);
  s.per_run_allocation.assign(N, std::vector<double>(nc, 0.0));
  auto slot = [&](double q) {
    for (std::size_t j = 0; j < nc; ++j)
      if (std::abs(candidate_q[j] - q) < 1e-12) return j;
    throw ValidationError("summarize: recommended stress is not a candidate");
  };
  for (std::size_t r = 0; r < N; ++r) {
    double sum = 0.0, sum2 = 0.0;
    std::vector<ModelParams> est;
    for (const auto& t : trials) {
      const RunRecord& rr = t.runs[r];
      sum += rr.avar;
      sum2 += rr.avar * rr.avar;
      est.push_back(rr.theta_hat);
      const std::size_t j = slot(rr.q);
      s.per_run_allocation[r][j] += 1.0 / K;
      s.allocation[j] += 1.0;
      if (rr.flags & (kFlagMleFailed | kFlagRidge)) ++s.flagged_runs;
    }
    const double mean = sum / K;
    s.mean_avar.push_back(mean);
    s.se_avar.push_back(K > 1 ? std::sqrt(std::max(0.0, (sum2 - K * mean * mean) / (K - 1.0)) / K) : 0.0);
    s.m.push_back(m_measure(est, truth));
  }
  for (auto& a : s.allocation) a /= K * static_cast<double>(N);
  return s;
}

// Runs `trials` campaigns per strategy. Trial (i, k) uses a seed derived from
// (seed, i, k), so results do not depend on the number of worker threads.
template <typename Progress>
StudyResult run_study(const StudyConfig& sc, Progress&& progress) {
  validate(sc);
  const DesignSession templ = session_template(sc);
  const std::size_t S = sc.strategies.size();
  const std::size_t K = static_cast<std::size_t>(sc.trials);

  StudyResult out;
  out.candidate_q = sc.candidates.q;
  out.trials.assign(S, std::vector<TrialRecord>(K));
  for (const auto& st : sc.strategies) out.labels.push_back(st.label);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::vector<std::exception_ptr> errors(S * K);
  auto worker = [&] {
    for (std::size_t job = next++; job < S * K; job = next++) {
      const std::size_t i = job / K, k = job % K;
      try {
        out.trials[i][k] = run_trial(sc.strategies[i], sc.truth, templ, derive_seed(sc.seed, {k}));
      } catch (...) {
        errors[job] = std::current_exception();
      }
      progress(++done, S * K);
    }
  };
  unsigned nthreads = sc.threads > 0 ? static_cast<unsigned>(sc.threads) : std::thread::hardware_concurrency();
  nthreads = std::max(1u, std::min<unsigned>(nthreads, static_cast<unsigned>(S * K)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < S; ++i)
    out.summaries.push_back(summarize(out.labels[i], out.trials[i], out.candidate_q, sc.truth.theta));
  return out;
}

inline StudyResult run_study(const StudyConfig& sc) {
  return run_study(sc, [](std::size_t, std::size_t) {});
}

}  // namespace seqalt
