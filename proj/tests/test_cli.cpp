#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "roughscatter/io.hpp"

namespace fs = std::filesystem;
using roughscatter::json;

namespace {

const std::string kCli = ROUGHSCATTER_CLI;
const std::string kSpecs = ROUGHSCATTER_SPECS;

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("rs_cli_" + std::to_string(::getpid()) + ".log");
  const int st = std::system((kCli + " " + args + " > " + log.string() + " 2>&1").c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  fs::remove(log);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("rs_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Cli, TraceTriangularDoubleReflection) {
  const fs::path d = fresh_dir("trace");
  const CliRun r = run("trace --spec " + kSpecs + "/triangular.json --xi 0 --phi 0 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(slurp(d / "result.json"));
  EXPECT_EQ(j["bounces"], 2);
  EXPECT_NEAR(j["xi_out"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(j["phi_out"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(slurp(d / "path.csv").substr(0, 4), "x,y\n");
  fs::remove_all(d);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("trace --spec /nonexistent.json --xi 0 --phi 0").code, 2);
  EXPECT_EQ(run("trace --spec " + kSpecs + "/triangular.json --xi 0 --phi 1.6").code, 2);
  EXPECT_EQ(run("trace --spec " + kSpecs + "/triangular.json --xi 1.5 --phi 0").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("measure --spec " + kSpecs + "/flat.json --samples 10").code, 2);  // no seed
  EXPECT_EQ(run("transport --density gaussian:x").code, 2);
  const CliRun r = run("trace --spec /nonexistent.json --xi 0 --phi 0");
  EXPECT_NE(r.out.find("cannot open"), std::string::npos);
}

TEST(Cli, MeasureIsDeterministic) {
  const fs::path a = fresh_dir("m1"), b = fresh_dir("m2");
  const std::string args = "measure --spec " + kSpecs + "/triangular.json --samples 20000 --bins 8 --seed 5 --out ";
  ASSERT_EQ(run(args + a.string() + " --threads 1").code, 0);
  ASSERT_EQ(run(args + b.string() + " --threads 3").code, 0);
  for (const char* f : {"measure.csv", "measure.json", "defects.json"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const json j = json::parse(slurp(a / "measure.json"));
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["samples"], 20000);
  EXPECT_EQ(j["version"], roughscatter::version());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, CheckFailureExitsFour) {
  // 100 samples cannot meet a 1e-3 marginal tolerance.
  const fs::path d = fresh_dir("check");
  EXPECT_EQ(run("measure --spec " + kSpecs + "/triangular.json --samples 100 --seed 1 --check --tol 1e-3 --out " +
                d.string())
                .code,
            4);
  fs::remove_all(d);
}

TEST(Cli, FailureLeavesNoOutput) {
  const fs::path d = fresh_dir("fail");
  const CliRun r = run("synthesize --permutation \"1 5;2 4\" --m 5 --epsilon 0.9 --seed 1 --out " + d.string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_FALSE(fs::exists(d));
}

TEST(Cli, BodyReport) {
  const fs::path d = fresh_dir("body");
  const CliRun r =
      run("body --spec " + kSpecs + "/square_triangular.json --samples 20000 --seed 2 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(slurp(d / "defects.json"));
  EXPECT_EQ(j["packing"]["copies"], 72);
  EXPECT_TRUE(j.contains("A1"));
  EXPECT_TRUE(j.contains("A2"));
  EXPECT_EQ(slurp(d / "nu.csv").substr(0, 33), "side,phi_cell,phi_plus_cell,mass\n");
  fs::remove_all(d);
}

TEST(Cli, SynthesizeReflector) {
  const fs::path a = fresh_dir("s1"), b = fresh_dir("s2");
  const std::string args = "synthesize --permutation \"1 5;2 4\" --m 5 --epsilon 0.2 --samples 500 --seed 4 --out ";
  ASSERT_EQ(run(args + a.string()).code, 0);
  ASSERT_EQ(run(args + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "hollow.json"), slurp(b / "hollow.json"));
  EXPECT_EQ(slurp(a / "misdirection.json"), slurp(b / "misdirection.json"));
  const json m = json::parse(slurp(a / "misdirection.json"));
  EXPECT_EQ(m["report"]["cells"].size(), 3u);
  // The written hollow loads back as a trace spec.
  EXPECT_GT(json::parse(slurp(a / "hollow.json"))["a"].get<double>(), 0.0);
  const CliRun t = run("trace --spec " + (a / "hollow.json").string() + " --xi 0 --phi 0.5");
  EXPECT_EQ(t.code, 0) << t.out;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, TransportReport) {
  const fs::path d = fresh_dir("transport");
  const CliRun r = run("transport --density uniform --bins 180 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("n,value,duality_gap"), std::string::npos);
  const json j = json::parse(slurp(d / "transport.json"));
  EXPECT_GE(j["value"].get<double>(), 0.9828);
  EXPECT_LE(j["value"].get<double>(), 1.0);
  EXPECT_NEAR(j["kappa"].get<double>(), 1.5, 1e-8);
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_EQ(j["refinement"].size(), 3u);
  fs::remove_all(d);
}
