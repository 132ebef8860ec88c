#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(NLMC_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string preset(const std::string& name) { return std::string(NLMC_SOURCE_DIR) + "/tools/presets/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nlmc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

TEST_F(CliTest, MissingConfigExitsTwoNamingThePath) {
  const auto r = run("rate --config /no/such/file.toml --out " + dir_.string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("/no/such/file.toml"), std::string::npos);
}

TEST_F(CliTest, UnknownKeyAndBadFlagsExitTwo) {
  const auto bad = write("bad.toml", "name = \"x\"\nbogus = 1\n");
  const auto r = run("tensor --config " + bad.string() + " --out " + dir_.string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("bogus"), std::string::npos);
  EXPECT_EQ(run("tensor").exit_code, 2);
  EXPECT_EQ(run("frobnicate --config " + bad.string()).exit_code, 2);
}

TEST_F(CliTest, TensorPairInstance) {
  const auto r = run("tensor --config " + preset("tensor_pair.toml") + " --out " + dir_.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("lhs=0.5 rhs=4 PASS"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "tensor.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "tensor.json"));
}

TEST_F(CliTest, BoundsPrintsKappa) {
  const auto r = run("bounds --config " + preset("bounds_kappa.toml") + " --out " + dir_.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("kappa=0.25"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "bounds.csv"));
}

TEST_F(CliTest, ContractionPasses) {
  const auto r = run("contraction --config " + preset("mv_contraction.toml") + " --out " + dir_.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("-> PASS"), std::string::npos) << r.output;
}

TEST_F(CliTest, RateCsvSchemaAndSeedDeterminism) {
  const auto cfg = write("rate.toml",
                         "name = \"small\"\nseed = 1\n[kernel]\ntype = \"sharp-mixture\"\ndim = 2\n"
                         "[initial]\nlaw = \"uniform-cube\"\n[run]\nN = [16, 32]\nhorizon = 2\ntrials = 4\n"
                         "[bound]\nvariant = \"coupling\"\n");
  const fs::path a = dir_ / "a", b = dir_ / "b", c = dir_ / "c";
  ASSERT_EQ(run("rate --config " + cfg.string() + " --seed 7 --out " + a.string()).exit_code, 0);
  ASSERT_EQ(run("rate --config " + cfg.string() + " --seed 7 --threads 2 --out " + b.string()).exit_code, 0);
  ASSERT_EQ(run("rate --config " + cfg.string() + " --out " + c.string()).exit_code, 0);
  const std::string csv = slurp(a / "rate.csv");
  EXPECT_EQ(csv, slurp(b / "rate.csv"));
  EXPECT_NE(csv, slurp(c / "rate.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,n,q,mean,stderr,bound,variant");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(a / "rate.json"));
}

TEST_F(CliTest, OutputsStayInOutDir) {
  const auto before = std::distance(fs::directory_iterator(dir_), fs::directory_iterator{});
  const fs::path out = dir_ / "out";
  ASSERT_EQ(run("tensor --config " + preset("tensor_pair.toml") + " --out " + out.string()).exit_code, 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_), fs::directory_iterator{}), before + 1);
}

}  // namespace
