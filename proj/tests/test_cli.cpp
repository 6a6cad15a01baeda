#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = SEQALT_CLI_PATH;
const fs::path kConfigs = SEQALT_CONFIG_DIR;
const std::string kFastChain = " --mcmc-length 1500 --burn-in 500 --thin 5";

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("seqalt_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  Result run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >" + (dir / "stdout").string() + " 2>" + (dir / "stderr").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout"), slurp(dir / "stderr")};
  }

  fs::path copy_session() {
    const fs::path p = dir / "session.json";
    fs::copy_file(kConfigs / "session_example.json", p);
    return p;
  }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

}  // namespace

TEST_F(Cli, FitCountsObservations) {
  const auto csv = write("d.csv", "x,t,delta\n0.45,2.1e8,0\n0.55,1.3e7,0\n0.65,9.0e5,0\n");
  const Result r = run("fit " + csv.string() + " --stress-as-fraction --json-report " + (dir / "fit.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("observations: 3"), std::string::npos);
  EXPECT_NE(r.out.find("seed:"), std::string::npos);
  const auto rep = nlohmann::json::parse(slurp(dir / "fit.json"));
  EXPECT_EQ(rep.at("observations"), 3);
}

TEST_F(Cli, FitRejectsBadDeltaWithLine) {
  const auto csv = write("d.csv", "x,t,delta\n600,2e8,0\n700,1e7,2\n");
  const Result r = run("fit " + csv.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingInputIsIoError) {
  EXPECT_EQ(run("fit " + (dir / "absent.csv").string()).code, 4);
  EXPECT_EQ(run("next-point " + (dir / "absent.json").string()).code, 4);
}

TEST_F(Cli, UnknownSubcommandOrFlagIsUsageError) {
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("fit").code, 2);
}

TEST_F(Cli, NextPointFreshSessionUsesDCriterionAndIsDeterministic) {
  const fs::path s = copy_session();
  const std::string original = slurp(s);
  const Result r1 = run("next-point " + s.string() + " --seed 7" + kFastChain);
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_NE(r1.out.find("criterion BayesD"), std::string::npos) << r1.out;
  EXPECT_NE(r1.out.find("seed: 7"), std::string::npos);
  const std::string after1 = slurp(s);
  EXPECT_NE(after1, original);
  EXPECT_EQ(nlohmann::json::parse(after1).at("history").size(), 1u);

  std::ofstream(s, std::ios::binary) << original;
  const Result r2 = run("next-point " + s.string() + " --seed 7" + kFastChain);
  ASSERT_EQ(r2.code, 0);
  EXPECT_EQ(r1.out, r2.out);
  EXPECT_EQ(slurp(s), after1);
}

TEST_F(Cli, ExhaustedScheduleFails) {
  const fs::path s = copy_session();
  auto j = nlohmann::json::parse(slurp(s));
  j["schedule"] = {{"N", 1}, {"N1", 1}};
  std::ofstream(s) << j.dump();
  ASSERT_EQ(run("next-point " + s.string() + " --seed 1" + kFastChain).code, 0);
  const Result r = run("next-point " + s.string() + " --seed 1" + kFastChain);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("campaign complete"), std::string::npos) << r.err;
}

TEST_F(Cli, RecordAppendsValidatesAndWarns) {
  const fs::path s = copy_session();
  const auto before = nlohmann::json::parse(slurp(s));
  const std::size_t n0 = before.at("observations").size();

  Result r = run("record " + s.string() + " --x 0.6 --t 4.4e6 --delta 0 --stress-as-fraction");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(s));
  EXPECT_EQ(j.at("observations").size(), n0 + 1);
  EXPECT_EQ(j.at("history"), before.at("history"));

  EXPECT_EQ(run("record " + s.string() + " --x 700 --t 0 --delta 0").code, 2);
  EXPECT_EQ(run("record " + s.string() + " --x 700 --t -5 --delta 0").code, 2);
  EXPECT_EQ(nlohmann::json::parse(slurp(s)).at("observations").size(), n0 + 1);

  ASSERT_EQ(run("next-point " + s.string() + " --seed 3" + kFastChain).code, 0);
  const double rec_x = nlohmann::json::parse(slurp(s)).at("history").back().at("x");
  r = run("record " + s.string() + " --x " + std::to_string(rec_x * 0.9) + " --t 1e7 --delta 0");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(s)).at("warnings").size(), 1u);
}

TEST_F(Cli, PosteriorWritesDraws) {
  const fs::path s = copy_session();
  const Result r = run("posterior " + s.string() + " --seed 5 --out " + (dir / "post").string() + kFastChain);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "post" / "draws.csv");
  EXPECT_EQ(csv.substr(0, 7), "A,B,nu\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRuns) {
  const auto cfg = write("study.json", R"({"strategies": [{"label": "a", "N": 2, "N1": 0}], "trials": 1})");
  const std::string common = "simulate --config " + cfg.string() + " --seed 11 --threads 1" + kFastChain + " --out ";
  ASSERT_EQ(run(common + (dir / "o1").string()).code, 0);
  ASSERT_EQ(run(common + (dir / "o2").string()).code, 0);
  for (const char* f : {"avar_trajectory.csv", "m_measure.csv", "allocation.csv", "per_run_allocation.csv", "trials.csv"}) {
    const std::string a = slurp(dir / "o1" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "o2" / f)) << f;
  }
  const std::string avar = slurp(dir / "o1" / "avar_trajectory.csv");
  EXPECT_EQ(std::count(avar.begin(), avar.end(), '\n'), 3);  // header + N rows
}

TEST_F(Cli, SimulateUnwritableOutputIsIoError) {
  const auto blocker = write("file", "x");
  const Result r = run("simulate --trials 1 --out " + (blocker / "sub").string());
  EXPECT_EQ(r.code, 4) << r.err;
}
