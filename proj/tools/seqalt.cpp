// seqalt: command-line front end for sequential Bayesian ALT planning.
//
//   seqalt fit <data.csv> [--config cfg.json]
//   seqalt posterior <session.json> [--out dir]
//   seqalt next-point <session.json>
//   seqalt record <session.json> --x X --t T --delta D
//   seqalt simulate [--config study.json] --out dir
//
// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 IO.

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "seqalt/design.hpp"
#include "seqalt/errors.hpp"
#include "seqalt/io.hpp"
#include "seqalt/likelihood.hpp"
#include "seqalt/posterior.hpp"
#include "seqalt/sim_harness.hpp"

namespace {

using namespace seqalt;
namespace fs = std::filesystem;

struct Overrides {
  std::string candidates;  // comma-separated q values
  std::optional<double> p;
  std::optional<double> censor_time;
  std::optional<int> mcmc_length;
  std::optional<int> burn_in;
  std::optional<int> thin;
  std::optional<int> trials;
  std::optional<int> threads;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError("cannot parse list value '" + item + "'");
    }
  }
  return out;
}

void apply(const Overrides& o, TestConfig& cfg, CandidateSet& cands, McmcSettings& mcmc) {
  if (!o.candidates.empty()) {
    cands.q = parse_list(o.candidates);
    validate(cands);
  }
  if (o.p) cfg.p = *o.p;
  if (o.censor_time) cfg.censor_time = *o.censor_time;
  validate(cfg);
  if (o.mcmc_length) mcmc.length = *o.mcmc_length;
  if (o.burn_in) mcmc.burn_in = *o.burn_in;
  if (o.thin) mcmc.thin = *o.thin;
  validate(mcmc);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::optional<std::uint64_t> fallback) {
  if (flag) return *flag;
  if (fallback) return *fallback;
  return std::random_device{}() | (static_cast<std::uint64_t>(std::random_device{}()) << 32);
}

void print_params(const ModelParams& t) {
  std::cout << "  A  = " << io::format_number(t.A) << "\n  B  = " << io::format_number(t.B)
            << "\n  nu = " << io::format_number(t.nu) << "\n";
}

int cmd_fit(const std::string& data_path, const std::string& config_path, bool as_fraction,
            const std::string& report_path, std::uint64_t seed) {
  TestConfig cfg;
  PriorSpec prior;
  std::optional<ParamBounds> bounds;
  if (!config_path.empty()) {
    const auto j = io::read_json_file(config_path);
    io::require_object(j, "config");
    for (const auto& [key, _] : j.items())
      if (key != "cfg" && key != "prior" && key != "bounds" && key != "format_version" && key != "profile" &&
          key != "candidates" && key != "schedule" && key != "observations" && key != "history" &&
          key != "seed" && key != "mcmc" && key != "warnings" && key != "truth" && key != "strategies" &&
          key != "trials" && key != "threads")
        throw ValidationError("config: unknown field '" + key + "'");
    if (j.contains("cfg")) cfg = io::test_config_from_json(j.at("cfg"));
    if (j.contains("prior")) prior = io::prior_from_json(j.at("prior"));
    if (j.contains("bounds")) bounds = io::bounds_from_json(j.at("bounds"), default_bounds(prior));
  }
  const ParamBounds b = bounds.value_or(default_bounds(prior));
  const Dataset data = io::read_dataset_csv(data_path, cfg, as_fraction);
  const FitReport fit = fit_mle(data, cfg, b);
  int failures = 0;
  for (const auto& o : data) failures += o.delta == 0;

  std::cout << "seed: " << seed << "\n";
  std::cout << "observations: " << data.size() << " (" << failures << " failures, " << data.size() - failures
            << " censored)\n";
  std::cout << "ML estimate:\n";
  print_params(fit.theta);
  std::cout << "log-likelihood: " << io::format_number(fit.log_likelihood) << "\n";
  std::cout << "converged: " << (fit.converged ? "yes" : "no") << ", iterations: " << fit.iterations
            << ", best start: " << fit.best_start << ", boundary hit: " << (fit.boundary_hit ? "yes" : "no") << "\n";
  if (!report_path.empty()) {
    nlohmann::json r = {{"seed", seed},
                        {"observations", data.size()},
                        {"failures", failures},
                        {"theta", {{"A", fit.theta.A}, {"B", fit.theta.B}, {"nu", fit.theta.nu}}},
                        {"log_likelihood", fit.log_likelihood},
                        {"converged", fit.converged},
                        {"iterations", fit.iterations},
                        {"best_start", fit.best_start},
                        {"boundary_hit", fit.boundary_hit},
                        {"bounds", io::to_json(b)}};
    io::write_file_atomic(report_path, r.dump(2) + "\n");
  }
  return 0;
}

int cmd_posterior(const std::string& session_path, const std::string& out_dir, const Overrides& o,
                  const std::optional<std::uint64_t>& seed_flag) {
  DesignSession s = io::load_session(session_path);
  apply(o, s.cfg, s.candidates, s.mcmc);
  const std::uint64_t seed = resolve_seed(seed_flag, s.seed);
  if (!out_dir.empty()) io::ensure_writable_dir(out_dir);
  const auto draws = sample_posterior(s.observations, s.prior, s.cfg, s.mcmc,
                                      derive_seed(seed, {static_cast<std::uint64_t>(s.history.size() + 1)}));
  double mA = 0, mB = 0, mN = 0;
  for (const auto& d : draws.draws) {
    mA += d.A;
    mB += d.B;
    mN += d.nu;
  }
  const double n = static_cast<double>(draws.draws.size());
  std::cout << "seed: " << seed << "\n";
  std::cout << "draws: " << draws.draws.size() << " (length " << draws.length << ", burn-in " << draws.burn_in
            << ", thin " << draws.thin << ")\n";
  std::cout << "acceptance rate: " << io::format_number(draws.acceptance_rate) << "\n";
  std::cout << "posterior mean:\n";
  print_params({mA / n, mB / n, mN / n});
  if (!out_dir.empty()) {
    const fs::path path = fs::path(out_dir) / "draws.csv";
    io::write_file_atomic(path, io::draws_csv(draws));
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_next_point(const std::string& session_path, const Overrides& o, const std::optional<std::uint64_t>& seed_flag) {
  DesignSession s = io::load_session(session_path);
  apply(o, s.cfg, s.candidates, s.mcmc);
  const std::uint64_t seed = resolve_seed(seed_flag, s.seed);
  PosteriorDraws draws;
  const Recommendation rec = recommend_next(s, seed, &draws);

  std::cout << "seed: " << seed << "\n";
  std::cout << "run " << rec.run << " of " << s.schedule.N << ", criterion " << to_string(rec.criterion) << "\n";
  std::cout << "posterior draws: " << draws.draws.size() << ", acceptance " << io::format_number(draws.acceptance_rate)
            << "\n";
  std::cout << "recommended stress: q = " << io::format_number(rec.q) << ", x = " << io::format_number(rec.x) << "\n";
  std::cout << "\n       q            x   " << std::setw(10) << to_string(rec.criterion) << "   skipped\n";
  for (const auto& row : rec.table.rows) {
    std::cout << std::setw(8) << io::format_number(row.q) << std::setw(13) << io::format_number(row.x) << "   "
              << std::setw(14) << io::format_number(row.value) << std::setw(8) << row.skipped
              << (row.unreliable ? "  unreliable" : "") << (row.x == rec.x ? "  <-" : "") << "\n";
  }
  io::save_session(session_path, s);
  return 0;
}

int cmd_record(const std::string& session_path, double x, double t, int delta, bool as_fraction) {
  DesignSession s = io::load_session(session_path);
  Observation obs{as_fraction ? x * s.cfg.sigma_ult : x, t, delta};
  const RecordOutcome out = record_observation(s, obs);
  if (out.stress_deviation) std::cerr << "warning: " << out.warning << "\n";
  io::save_session(session_path, s);
  std::cout << "seed: " << s.seed << "\n";
  std::cout << "recorded observation " << s.observations.size() << ": x = " << io::format_number(obs.x)
            << ", t = " << io::format_number(obs.t) << ", delta = " << obs.delta << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, const Overrides& o,
                 const std::optional<std::uint64_t>& seed_flag) {
  StudyConfig sc;
  if (!config_path.empty()) sc = io::study_from_json(io::read_json_file(config_path));
  apply(o, sc.cfg, sc.candidates, sc.mcmc);
  if (o.trials) sc.trials = *o.trials;
  if (o.threads) sc.threads = *o.threads;
  sc.seed = resolve_seed(seed_flag, sc.seed);
  validate(sc);
  if (out_dir.empty()) throw ValidationError("simulate: --out <dir> is required");
  io::ensure_writable_dir(out_dir);

  std::cout << "seed: " << sc.seed << "\n";
  std::cout << "strategies: " << sc.strategies.size() << ", trials: " << sc.trials << "\n" << std::flush;
  const auto start = std::chrono::steady_clock::now();
  const StudyResult r = run_study(sc, [](std::size_t done, std::size_t total) {
    if (done == total || done % 5 == 0) std::cerr << "\r  trials " << done << "/" << total << std::flush;
  });
  std::cerr << "\n";
  io::write_study_csvs(r, out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& s : r.summaries)
    std::cout << "  " << s.label << ": AVar[N] = " << io::format_number(s.mean_avar.back())
              << ", M[N] = " << io::format_number(s.m.back()) << ", flagged runs = " << s.flagged_runs << "\n";
  std::cout << "wrote 5 CSV files to " << out_dir << "\n";
  std::cout << "runtime: " << std::fixed << std::setprecision(1) << secs << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Bayesian dual-objective planning for accelerated life tests"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string config_path, out_dir;
  Overrides o;
  app.add_option("--seed", seed, "RNG seed (default: from the session or study file)");
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--candidates", o.candidates, "comma-separated candidate stress fractions");
  app.add_option("--p", o.p, "quantile of interest");
  app.add_option("--censor-time", o.censor_time, "censoring horizon in cycles");
  app.add_option("--mcmc-length", o.mcmc_length, "MCMC chain length");
  app.add_option("--burn-in", o.burn_in, "MCMC burn-in");
  app.add_option("--thin", o.thin, "MCMC thinning");

  std::string data_path, report_path, session_path;
  bool as_fraction = false;
  auto* fit = app.add_subcommand("fit", "maximum likelihood fit of an x,t,delta CSV");
  fit->add_option("data", data_path, "data CSV with header x,t,delta")->required();
  fit->add_flag("--stress-as-fraction", as_fraction, "x column holds q = x / sigma_ult");
  fit->add_option("--json-report", report_path, "write the fit report as JSON");

  auto* post = app.add_subcommand("posterior", "sample the posterior of a session and export draws");
  post->add_option("session", session_path, "session JSON")->required();

  auto* next = app.add_subcommand("next-point", "recommend the next test stress and append it to the history");
  next->add_option("session", session_path, "session JSON")->required();

  double rx = 0.0, rt = 0.0;
  int rdelta = 0;
  auto* rec = app.add_subcommand("record", "append an observed unit to a session");
  rec->add_option("session", session_path, "session JSON")->required();
  rec->add_option("--x", rx, "tested stress")->required();
  rec->add_option("--t", rt, "cycles to failure or censoring")->required();
  rec->add_option("--delta", rdelta, "1 if censored, else 0")->required();
  rec->add_flag("--stress-as-fraction", as_fraction, "--x holds q = x / sigma_ult");

  auto* sim = app.add_subcommand("simulate", "run the strategy comparison study");
  sim->add_option("--trials", o.trials, "trials per strategy");
  sim->add_option("--threads", o.threads, "worker threads (0: all cores)");

  for (auto* sub : {fit, post, next, rec, sim}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(data_path, config_path, as_fraction, report_path, resolve_seed(seed, 0));
    if (*post) return cmd_posterior(session_path, out_dir, o, seed);
    if (*next) return cmd_next_point(session_path, o, seed);
    if (*rec) return cmd_record(session_path, rx, rt, rdelta, as_fraction);
    if (*sim) return cmd_simulate(config_path, out_dir, o, seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
