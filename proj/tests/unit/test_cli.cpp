#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbim/io.hpp"

namespace fs = std::filesystem;
using sbim::io::json;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sbim_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SBIM_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    RunResult r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Simulated gamma-Poisson data and a blocked table on a rate grid.
  void make_table(const std::string& table, const std::string& extra = "") const {
    ASSERT_EQ(run("--seed 3 --out " + path("y.csv") + " simulate --model gp --theta 1 --n 500").status, 0);
    const auto r = run("--seed 4 " + extra + " pf --model gp --data " + path("y.csv") +
                       " --grid 0.5:1.5:101 --blocks 10 --table " + table);
    ASSERT_EQ(r.status, 0) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, DryRunPrintsPlanAndWritesNothing) {
  const auto r = run("--dry-run --out " + path("y.csv") + " simulate --model gp --theta 1 --n 50");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_FALSE(fs::exists(path("y.csv")));
  const json plan = json::parse(r.out);
  EXPECT_EQ(plan["command"], "simulate");
  EXPECT_EQ(plan["n"], 50);
}

TEST_F(CliTest, SimulateIsDeterministicGivenSeed) {
  ASSERT_EQ(run("--seed 9 --out " + path("a.csv") + " simulate --model lgss --theta 0.2 --n 30").status, 0);
  ASSERT_EQ(run("--seed 9 --out " + path("b.csv") + " simulate --model lgss --theta 0.2 --n 30").status, 0);
  ASSERT_EQ(run("--seed 10 --out " + path("c.csv") + " simulate --model lgss --theta 0.2 --n 30").status, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
  EXPECT_EQ(slurp(path("a.csv")).substr(0, 8), "y_1,y_2\n");
  EXPECT_TRUE(fs::exists(path("a.csv") + ".manifest.json"));
}

TEST_F(CliTest, OracleReportsExactLogLikelihood) {
  const auto r = run("--out " + path("y.csv") + " simulate --model gauss --theta 0 --n 20 --oracle");
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["exact_loglik"].is_number());
  EXPECT_TRUE(j["mle"].is_number());
}

TEST_F(CliTest, PfTableIsByteIdenticalAcrossThreadCounts) {
  make_table(path("t1.csv"), "--threads 1");
  make_table(path("t2.csv"), "--threads 3");
  const std::string a = slurp(path("t1.csv"));
  EXPECT_EQ(a, slurp(path("t2.csv")));
  const auto t = sbim::io::read_table_csv(path("t1.csv"));
  EXPECT_EQ(t.M(), 101);
  EXPECT_EQ(t.n_obs, 500);
  ASSERT_TRUE(t.per_block_values.has_value());
  EXPECT_EQ(t.per_block_values->cols(), 10);
  for (int m = 0; m < t.M(); ++m) EXPECT_NEAR(t.per_block_values->row(m).sum(), t.values(m), 1e-9 * std::abs(t.values(m)));
}

TEST_F(CliTest, PfAppendsToExistingTable) {
  make_table(path("t.csv"));
  const auto r = run("--seed 5 pf --model gp --data " + path("y.csv") + " --theta 1.0 --replicates 3 --blocks 10 --table " +
                     path("t.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(sbim::io::read_table_csv(path("t.csv")).M(), 104);
  const auto bad = run("pf --model gp --data " + path("y.csv") + " --theta 1.0 --blocks 5 --table " + path("t.csv"));
  EXPECT_NE(bad.status, 0);
}

TEST_F(CliTest, HtAndCiFlow) {
  make_table(path("t.csv"));
  const auto ht = run("ht --table " + path("t.csv") + " --null 1.0 --test proxy --k1 auto");
  ASSERT_EQ(ht.status, 0) << ht.err;
  const json h = json::parse(ht.out);
  EXPECT_EQ(h["k1_source"], "auto");
  EXPECT_EQ(h["sigma2_source"], "first_stage_fit");
  EXPECT_TRUE(h.contains("theta_star"));
  EXPECT_TRUE(h.contains("sigma2_2nd"));
  EXPECT_TRUE(h.contains("k1_used"));
  const double p = h["p_value"].get<double>();
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);

  const auto ci = run("ci --table " + path("t.csv") + " --test proxy --level 0.95");
  ASSERT_EQ(ci.status, 0) << ci.err;
  const json c = json::parse(ci.out);
  EXPECT_TRUE(c.contains("kind"));
  EXPECT_TRUE(c.contains("bounds"));

  const auto mesle = run("ht --table " + path("t.csv") + " --null 1.0 --test mesle");
  ASSERT_EQ(mesle.status, 0) << mesle.err;
  EXPECT_EQ(json::parse(mesle.out)["df1"], 1);

  std::ofstream(path("k1.json")) << "[[2.0]]";
  const auto file = run("ht --table " + path("t.csv") + " --null 1.0 --test proxy --k1 file --k1-file " + path("k1.json"));
  ASSERT_EQ(file.status, 0) << file.err;
  EXPECT_EQ(json::parse(file.out)["k1_source"], "file");
}

TEST_F(CliTest, MergedBlocksAndGridRegion) {
  make_table(path("t.csv"));
  EXPECT_EQ(run("ht --table " + path("t.csv") + " --null 1.0 --test proxy --blocks 5").status, 0);
  EXPECT_NE(run("ht --table " + path("t.csv") + " --null 1.0 --test proxy --blocks 3").status, 0);
  const auto r = run("ci --table " + path("t.csv") + " --test mesle --grid 0.8:1.2:5");
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["kind"], "grid_region");
  EXPECT_EQ(j["points"].size(), 5u);
}

TEST_F(CliTest, DesignProposesSequentialPoints) {
  make_table(path("t.csv"));
  const auto r = run("design --table " + path("t.csv") + " --propose 2");
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["proposals"].size(), 2u);
  EXPECT_TRUE(j["proposals"][0]["point"].is_array());
}

TEST_F(CliTest, ErrorsAreJsonWithNonzeroExit) {
  const auto r = run("ht --table " + path("missing.csv") + " --null 1");
  EXPECT_NE(r.status, 0);
  const json e = json::parse(r.err);
  EXPECT_TRUE(e["error"].contains("type"));
  EXPECT_TRUE(e["error"].contains("message"));

  const auto m = run("simulate --model nope --theta 1");
  EXPECT_NE(m.status, 0);
  EXPECT_EQ(json::parse(m.err)["error"]["type"], "DomainError");
}

TEST_F(CliTest, PipelineIsDeterministic) {
  const std::string args = " pipeline --n 200 --M 41 --step 0.01";
  const auto a = run("--seed 2 --out " + path("p1") + args);
  const auto b = run("--seed 2 --out " + path("p2") + args);
  ASSERT_EQ(a.status, 0) << a.err;
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(path("p1") + "/table.csv"), slurp(path("p2") + "/table.csv"));
  EXPECT_TRUE(fs::exists(path("p1") + "/manifest.json"));
  const json j = json::parse(a.out);
  EXPECT_TRUE(j.contains("ci"));
}

TEST_F(CliTest, BenchmarkSmallRun) {
  const auto r = run("benchmark --sims 100,300 --replicates 4 --coverage-n 50 --datasets 3 --coverage-sims 200");
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["ess_by_M"].size(), 2u);
  EXPECT_EQ(j["coverage_by_n"].size(), 1u);
  EXPECT_TRUE(j.contains("interval_widths"));
}
