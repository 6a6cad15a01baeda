#pragma once

// Persistence: JSON session and study documents, the x,t,delta data CSV,
// posterior draw export and the study CSV tables.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "seqalt/design.hpp"
#include "seqalt/errors.hpp"
#include "seqalt/posterior.hpp"
#include "seqalt/sim_harness.hpp"

namespace seqalt::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// helpers

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ValidationError(where + ": unknown field '" + key + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T read_req(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  T out{};
  read_opt(j, key, out, where);
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// domain types <-> JSON

inline json to_json(const TestConfig& c) {
  return {{"h", c.h},         {"R", c.R}, {"alpha", c.alpha}, {"sigma_ult", c.sigma_ult},
          {"family", std::string(to_string(c.family))}, {"p", c.p}, {"censor_time", c.censor_time}};
}

inline TestConfig test_config_from_json(const json& j) {
  const std::string w = "cfg";
  reject_unknown(j, {"h", "R", "alpha", "sigma_ult", "family", "p", "censor_time"}, w);
  TestConfig c;
  read_opt(j, "h", c.h, w);
  read_opt(j, "R", c.R, w);
  read_opt(j, "alpha", c.alpha, w);
  read_opt(j, "sigma_ult", c.sigma_ult, w);
  std::string fam(to_string(c.family));
  read_opt(j, "family", fam, w);
  c.family = family_from_string(fam);
  read_opt(j, "p", c.p, w);
  read_opt(j, "censor_time", c.censor_time, w);
  validate(c);
  return c;
}

inline json to_json(const PriorSpec& p) {
  return {{"A_range", {p.A_lo, p.A_hi}},
          {"B_range", {p.B_lo, p.B_hi}},
          {"nu2_shape", p.nu2_shape},
          {"nu2_scale", p.nu2_scale}};
}

inline PriorSpec prior_from_json(const json& j) {
  const std::string w = "prior";
  reject_unknown(j, {"A_range", "B_range", "nu2_shape", "nu2_scale"}, w);
  PriorSpec p;
  std::array<double, 2> a{p.A_lo, p.A_hi}, b{p.B_lo, p.B_hi};
  read_opt(j, "A_range", a, w);
  read_opt(j, "B_range", b, w);
  p.A_lo = a[0];
  p.A_hi = a[1];
  p.B_lo = b[0];
  p.B_hi = b[1];
  read_opt(j, "nu2_shape", p.nu2_shape, w);
  read_opt(j, "nu2_scale", p.nu2_scale, w);
  validate(p);
  return p;
}

inline json to_json(const ParamBounds& b) {
  return {{"A_range", {b.A_lo, b.A_hi}}, {"B_range", {b.B_lo, b.B_hi}}, {"nu_range", {b.nu_lo, b.nu_hi}}};
}

inline ParamBounds bounds_from_json(const json& j, ParamBounds b) {
  const std::string w = "bounds";
  reject_unknown(j, {"A_range", "B_range", "nu_range"}, w);
  std::array<double, 2> a{b.A_lo, b.A_hi}, bb{b.B_lo, b.B_hi}, n{b.nu_lo, b.nu_hi};
  read_opt(j, "A_range", a, w);
  read_opt(j, "B_range", bb, w);
  read_opt(j, "nu_range", n, w);
  b = {a[0], a[1], bb[0], bb[1], n[0], n[1]};
  validate(b);
  return b;
}

inline json to_json(const UseProfile& p) { return {{"q", p.q}, {"weights", p.weights}}; }

inline UseProfile profile_from_json(const json& j) {
  reject_unknown(j, {"q", "weights"}, "profile");
  UseProfile p;
  p.q = read_req<std::vector<double>>(j, "q", "profile");
  p.weights = read_req<std::vector<double>>(j, "weights", "profile");
  validate(p);
  return p;
}

inline json to_json(const CandidateSet& c) { return {{"q", c.q}}; }

inline CandidateSet candidates_from_json(const json& j) {
  reject_unknown(j, {"q"}, "candidates");
  CandidateSet c;
  c.q = read_req<std::vector<double>>(j, "q", "candidates");
  validate(c);
  return c;
}

inline json to_json(const Schedule& s) { return {{"N", s.N}, {"N1", s.N1}}; }

inline Schedule schedule_from_json(const json& j, const std::string& w = "schedule") {
  reject_unknown(j, {"N", "N1"}, w);
  Schedule s;
  s.N = read_req<int>(j, "N", w);
  s.N1 = read_req<int>(j, "N1", w);
  validate(s);
  return s;
}

inline json to_json(const Observation& o) { return {{"x", o.x}, {"t", o.t}, {"delta", o.delta}}; }

inline Observation observation_from_json(const json& j, const std::string& w) {
  reject_unknown(j, {"x", "t", "delta"}, w);
  return {read_req<double>(j, "x", w), read_req<double>(j, "t", w), read_req<int>(j, "delta", w)};
}

inline json to_json(const Dataset& d) {
  json a = json::array();
  for (const auto& o : d) a.push_back(to_json(o));
  return a;
}

inline Dataset dataset_from_json(const json& j, const std::string& w) {
  if (!j.is_array()) throw ValidationError(w + ": expected an array");
  Dataset d;
  for (std::size_t i = 0; i < j.size(); ++i) d.push_back(observation_from_json(j[i], w + "[" + std::to_string(i) + "]"));
  return d;
}

inline json to_json(const HistoryEntry& h) {
  return {{"run", h.run}, {"criterion", std::string(to_string(h.criterion))}, {"q", h.q}, {"x", h.x}, {"value", h.value}};
}

inline HistoryEntry history_from_json(const json& j, const std::string& w) {
  reject_unknown(j, {"run", "criterion", "q", "x", "value"}, w);
  HistoryEntry h;
  h.run = read_req<int>(j, "run", w);
  h.criterion = criterion_from_string(read_req<std::string>(j, "criterion", w));
  h.q = read_req<double>(j, "q", w);
  h.x = read_req<double>(j, "x", w);
  h.value = read_req<double>(j, "value", w);
  return h;
}

inline json to_json(const McmcSettings& m) {
  json j = {{"length", m.length}, {"burn_in", m.burn_in}, {"thin", m.thin}, {"adapt_interval", m.adapt_interval}};
  if (m.initial) j["initial"] = {{"A", m.initial->A}, {"B", m.initial->B}, {"nu", m.initial->nu}};
  return j;
}

inline ModelParams params_from_json(const json& j, const std::string& w) {
  reject_unknown(j, {"A", "B", "nu"}, w);
  ModelParams p{read_req<double>(j, "A", w), read_req<double>(j, "B", w), read_req<double>(j, "nu", w)};
  validate(p);
  return p;
}

inline McmcSettings mcmc_from_json(const json& j) {
  const std::string w = "mcmc";
  reject_unknown(j, {"length", "burn_in", "thin", "adapt_interval", "initial"}, w);
  McmcSettings m;
  read_opt(j, "length", m.length, w);
  read_opt(j, "burn_in", m.burn_in, w);
  read_opt(j, "thin", m.thin, w);
  read_opt(j, "adapt_interval", m.adapt_interval, w);
  if (j.contains("initial")) m.initial = params_from_json(j.at("initial"), "mcmc.initial");
  validate(m);
  return m;
}

// ---------------------------------------------------------------------------
// session document

inline json session_to_json(const DesignSession& s) {
  json hist = json::array();
  for (const auto& h : s.history) hist.push_back(to_json(h));
  return {{"format_version", kFormatVersion},
          {"cfg", to_json(s.cfg)},
          {"prior", to_json(s.prior)},
          {"profile", to_json(s.profile)},
          {"candidates", to_json(s.candidates)},
          {"schedule", to_json(s.schedule)},
          {"observations", to_json(s.observations)},
          {"history", hist},
          {"seed", s.seed},
          {"mcmc", to_json(s.mcmc)},
          {"warnings", s.warnings}};
}

inline DesignSession session_from_json(const json& j) {
  const std::string w = "session";
  reject_unknown(j,
                 {"format_version", "cfg", "prior", "profile", "candidates", "schedule", "observations", "history",
                  "seed", "mcmc", "warnings"},
                 w);
  const int version = read_req<int>(j, "format_version", w);
  if (version != kFormatVersion)
    throw ValidationError("session: unsupported format_version " + std::to_string(version));
  DesignSession s;
  s.cfg = test_config_from_json(j.at("cfg"));
  s.prior = prior_from_json(read_req<json>(j, "prior", w));
  if (j.contains("profile")) s.profile = profile_from_json(j.at("profile"));
  if (j.contains("candidates")) s.candidates = candidates_from_json(j.at("candidates"));
  s.schedule = schedule_from_json(read_req<json>(j, "schedule", w));
  if (j.contains("observations")) s.observations = dataset_from_json(j.at("observations"), "observations");
  if (j.contains("history")) {
    const json& hj = j.at("history");
    if (!hj.is_array()) throw ValidationError("history: expected an array");
    for (std::size_t i = 0; i < hj.size(); ++i)
      s.history.push_back(history_from_json(hj[i], "history[" + std::to_string(i) + "]"));
  }
  s.seed = read_req<std::uint64_t>(j, "seed", w);
  if (j.contains("mcmc")) s.mcmc = mcmc_from_json(j.at("mcmc"));
  read_opt(j, "warnings", s.warnings, w);
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// study document

inline json study_to_json(const StudyConfig& sc) {
  json levels = json::array();
  for (const auto& l : sc.truth.initial_design) levels.push_back({{"q", l.q}, {"count", l.count}});
  json strategies = json::array();
  for (const auto& st : sc.strategies)
    strategies.push_back({{"label", st.label}, {"N", st.schedule.N}, {"N1", st.schedule.N1}});
  json truth = {{"theta", {{"A", sc.truth.theta.A}, {"B", sc.truth.theta.B}, {"nu", sc.truth.theta.nu}}},
                {"initial_design", levels}};
  if (!sc.truth.initial_data.empty()) truth["initial_data"] = to_json(sc.truth.initial_data);
  return {{"cfg", to_json(sc.cfg)},
          {"prior", to_json(sc.prior)},
          {"profile", to_json(sc.profile)},
          {"candidates", to_json(sc.candidates)},
          {"truth", truth},
          {"strategies", strategies},
          {"trials", sc.trials},
          {"mcmc", to_json(sc.mcmc)},
          {"seed", sc.seed},
          {"threads", sc.threads}};
}

inline StudyConfig study_from_json(const json& j) {
  const std::string w = "study";
  reject_unknown(j, {"cfg", "prior", "profile", "candidates", "truth", "strategies", "trials", "mcmc", "seed", "threads"},
                 w);
  StudyConfig sc;
  if (j.contains("cfg")) sc.cfg = test_config_from_json(j.at("cfg"));
  if (j.contains("prior")) sc.prior = prior_from_json(j.at("prior"));
  if (j.contains("profile")) sc.profile = profile_from_json(j.at("profile"));
  if (j.contains("candidates")) sc.candidates = candidates_from_json(j.at("candidates"));
  if (j.contains("truth")) {
    const json& t = j.at("truth");
    reject_unknown(t, {"theta", "initial_design", "initial_data"}, "truth");
    if (t.contains("theta")) sc.truth.theta = params_from_json(t.at("theta"), "truth.theta");
    if (t.contains("initial_design")) {
      sc.truth.initial_design.clear();
      for (const auto& l : t.at("initial_design")) {
        reject_unknown(l, {"q", "count"}, "truth.initial_design");
        sc.truth.initial_design.push_back(
            {read_req<double>(l, "q", "truth.initial_design"), read_req<int>(l, "count", "truth.initial_design")});
      }
    }
    if (t.contains("initial_data")) sc.truth.initial_data = dataset_from_json(t.at("initial_data"), "truth.initial_data");
  }
  if (j.contains("strategies")) {
    sc.strategies.clear();
    for (const auto& s : j.at("strategies")) {
      reject_unknown(s, {"label", "N", "N1"}, "strategies");
      StrategySpec st;
      st.label = read_req<std::string>(s, "label", "strategies");
      st.schedule = {read_req<int>(s, "N", "strategies"), read_req<int>(s, "N1", "strategies")};
      sc.strategies.push_back(st);
    }
  }
  read_opt(j, "trials", sc.trials, w);
  if (j.contains("mcmc")) sc.mcmc = mcmc_from_json(j.at("mcmc"));
  read_opt(j, "seed", sc.seed, w);
  read_opt(j, "threads", sc.threads, w);
  validate(sc);
  return sc;
}

// ---------------------------------------------------------------------------
// files

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
}

// Writes `content` next to `path` and renames it into place, so readers see
// either the old or the new file, never a partial one.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

inline DesignSession load_session(const std::filesystem::path& path) { return session_from_json(read_json_file(path)); }

inline void save_session(const std::filesystem::path& path, const DesignSession& s) {
  write_file_atomic(path, session_to_json(s).dump(2) + "\n");
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, int line, const char* name) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
    throw ValidationError("line " + std::to_string(line) + ": cannot parse " + name + " '" + f + "'");
  return v;
}

}  // namespace detail

// Reads the `x,t,delta` CSV. With `stress_as_fraction`, x is q and is scaled
// by sigma_ult.
inline Dataset read_dataset_csv(std::istream& in, const TestConfig& cfg, bool stress_as_fraction) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  std::string header;
  for (char c : line)
    if (c != ' ' && c != '\t' && c != '\r') header += c;
  if (header != "x,t,delta") throw ValidationError("line " + std::to_string(lineno) + ": expected header 'x,t,delta'");

  Dataset data;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 3)
      throw ValidationError("line " + std::to_string(lineno) + ": expected 3 fields, found " +
                            std::to_string(fields.size()));
    Observation obs;
    obs.x = detail::parse_double(fields[0], lineno, "x");
    obs.t = detail::parse_double(fields[1], lineno, "t");
    const double d = detail::parse_double(fields[2], lineno, "delta");
    if (d != 0.0 && d != 1.0)
      throw ValidationError("line " + std::to_string(lineno) + ": delta must be 0 or 1 (got " + detail::trim(fields[2]) + ")");
    obs.delta = static_cast<int>(d);
    if (stress_as_fraction) obs.x *= cfg.sigma_ult;
    try {
      validate(obs, cfg);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    data.push_back(obs);
  }
  return data;
}

inline Dataset read_dataset_csv(const std::filesystem::path& path, const TestConfig& cfg, bool stress_as_fraction) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset_csv(in, cfg, stress_as_fraction);
}

inline std::string draws_csv(const PosteriorDraws& d) {
  std::string s = "A,B,nu\n";
  for (const auto& t : d.draws) s += format_number(t.A) + "," + format_number(t.B) + "," + format_number(t.nu) + "\n";
  return s;
}

// Fails early when `dir` cannot be created or written.
inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const auto probe = dir / (".write_probe." + std::to_string(::getpid()));
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

// The five study tables, keyed by file name.
inline std::map<std::string, std::string> study_csvs(const StudyResult& r) {
  std::ostringstream avar, m, alloc, per_run, trials;
  avar << "strategy,run,mean_avar,se\n";
  m << "strategy,run,M\n";
  alloc << "strategy,q,fraction\n";
  per_run << "strategy,run,q,fraction\n";
  trials << "strategy,trial,run,criterion,q,t,delta,A_hat,B_hat,nu_hat,avar,flags\n";
  for (std::size_t i = 0; i < r.summaries.size(); ++i) {
    const auto& s = r.summaries[i];
    const std::string& lab = s.label;
    for (std::size_t run = 0; run < s.mean_avar.size(); ++run) {
      avar << lab << ',' << run + 1 << ',' << format_number(s.mean_avar[run]) << ',' << format_number(s.se_avar[run]) << '\n';
      m << lab << ',' << run + 1 << ',' << format_number(s.m[run]) << '\n';
      for (std::size_t j = 0; j < r.candidate_q.size(); ++j)
        per_run << lab << ',' << run + 1 << ',' << format_number(r.candidate_q[j]) << ','
                << format_number(s.per_run_allocation[run][j]) << '\n';
    }
    for (std::size_t j = 0; j < r.candidate_q.size(); ++j)
      alloc << lab << ',' << format_number(r.candidate_q[j]) << ',' << format_number(s.allocation[j]) << '\n';
    for (std::size_t k = 0; k < r.trials[i].size(); ++k)
      for (const auto& rr : r.trials[i][k].runs)
        trials << lab << ',' << k + 1 << ',' << rr.run << ',' << to_string(rr.criterion) << ',' << format_number(rr.q)
               << ',' << format_number(rr.obs.t) << ',' << rr.obs.delta << ',' << format_number(rr.theta_hat.A) << ','
               << format_number(rr.theta_hat.B) << ',' << format_number(rr.theta_hat.nu) << ','
               << format_number(rr.avar) << ',' << rr.flags << '\n';
  }
  return {{"avar_trajectory.csv", avar.str()},
          {"m_measure.csv", m.str()},
          {"allocation.csv", alloc.str()},
          {"per_run_allocation.csv", per_run.str()},
          {"trials.csv", trials.str()}};
}

inline void write_study_csvs(const StudyResult& r, const std::filesystem::path& dir) {
  ensure_writable_dir(dir);
  for (const auto& [name, content] : study_csvs(r)) write_file_atomic(dir / name, content);
}

}  // namespace seqalt::io
