#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
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
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kolmo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const fs::path o = dir_ / "stdout.txt";
    const fs::path e = dir_ / "stderr.txt";
    const std::string cmd = std::string(KOLMO_CLI_PATH) + " " + args + " > " + o.string() + " 2> " + e.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  std::string write_config(const std::string& body) const {
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << body;
    return p.string();
  }

  static std::string sample(const std::string& name) { return std::string(KOLMO_CONFIG_DIR) + "/" + name; }

  fs::path dir_;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_F(Cli, AnalyzeTwoDimensional) {
  const auto r = run("--config " + sample("kolmogorov_2d.json") + " analyze");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "block");
  EXPECT_EQ(rows[1][2], "1");
  EXPECT_EQ(rows[2][2], "2");
  EXPECT_EQ(rows[2][3], "1/3");
  EXPECT_NE(r.err.find("k=1"), std::string::npos);
}

TEST_F(Cli, AnalyzeJsonShift) {
  const auto r = run("--config " + sample("shift_3d.json") + " --format json analyze");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"k\": 2"), std::string::npos);
}

TEST_F(Cli, GramianMatchesClosedForm) {
  const auto cfg = write_config(R"({"operator": {"n": 2, "p_tilde": 1, "Q0": [[1.0]], "A": [[0, 0], [1, 1]]},
                                    "gramian": {"t": [0.5, 1.0]}})");
  const auto r = run("--config " + cfg + " gramian");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][1], "q_1_1");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double t = std::stod(rows[k][0]);
    const double et = std::exp(t);
    EXPECT_NEAR(std::stod(rows[k][1]), t, 1e-14);
    EXPECT_NEAR(std::stod(rows[k][2]), et - 1 - t, 1e-13);
    EXPECT_NEAR(std::stod(rows[k][4]), 0.5 * (std::exp(2 * t) - 1) - 2 * (et - 1) + t, 1e-13);
  }
}

TEST_F(Cli, EvaluateConstantIsExactlyOne) {
  const auto r = run("--config " + sample("kolmogorov_2d_gaussian.json") + " evaluate");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "method");
  EXPECT_EQ(rows[1][0], "direct");
  EXPECT_EQ(std::stod(rows[1][4]), 1.0);
  EXPECT_EQ(std::stod(rows[1][5]), 0.0);
  EXPECT_EQ(rows[1][6], "1000");
  EXPECT_EQ(rows[1][7], "7");
}

TEST_F(Cli, SeedAndBudgetOverrides) {
  const auto r = run("--config " + sample("kolmogorov_2d_gaussian.json") + " --seed 99 --budget 16 evaluate");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  EXPECT_EQ(rows[1][6], "16");
  EXPECT_EQ(rows[1][7], "99");
}

TEST_F(Cli, OutputDirectoryAndDeterminism) {
  const auto cfg = write_config(R"({"operator": {"n": 2, "p_tilde": 1, "Q0": [[1.0]], "A": [[0, 0], [1, 1]],
                                      "drift": [{"target": 1, "amplitude": 0.5, "a": [1, 0.5]}]},
                                    "seed": 3,
                                    "evaluate": {"field": {"type": "trig", "w": [1, 0.5]}, "t": [0.2],
                                                 "points": [[0, 0], [0.5, 0.5]], "method": "both", "budget": 500}})");
  ASSERT_EQ(run("--config " + cfg + " --threads 1 --out " + (dir_ / "a").string() + " evaluate").code, 0);
  ASSERT_EQ(run("--config " + cfg + " --threads 4 --out " + (dir_ / "b").string() + " evaluate").code, 0);
  const std::string a = slurp(dir_ / "a" / "evaluate.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "evaluate.csv"));
  EXPECT_EQ(parse_csv(a).size(), 5u);
}

TEST_F(Cli, SolveParabolicConstantSource) {
  const auto r = run("--config " + sample("kolmogorov_2d_gaussian.json") + " solve");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "kind");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double t = std::stod(rows[k][2]);
    const double mean = std::stod(rows[k][5]);
    const double bias = std::stod(rows[k][7]);
    EXPECT_LE(std::abs(mean - t), bias);
  }
}

TEST_F(Cli, VerifyGaussianPasses) {
  const auto cfg = write_config(R"({"operator": {"n": 2, "p_tilde": 1, "Q0": [[1.0]], "A": [[0, 0], [1, 1]]},
                                    "seed": 5,
                                    "verify": {"flow_q": [2], "flow_paths": 4000,
                                               "schauder": {"theta": 0.5, "samples": 256,
                                                            "family": [{"type": "trig", "w": [1, 0]}]}}})");
  const auto r = run("--config " + cfg + " --out " + (dir_ / "v").string() + " verify");
  EXPECT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(slurp(dir_ / "v" / "verify_report.csv"));
  ASSERT_GT(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "name");
  EXPECT_TRUE(fs::exists(dir_ / "v" / "verify_points.csv"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--config " + sample("not_hypoelliptic.json") + " analyze").code, 2);
  EXPECT_EQ(run("--config " + (dir_ / "missing.json").string() + " analyze").code, 2);
  EXPECT_EQ(run("--config " + sample("kolmogorov_2d.json")).code, 2);
  EXPECT_EQ(run("--config " + sample("kolmogorov_2d.json") + " --format xml analyze").code, 2);
  const auto bad = write_config(R"({"operator": {"n": 2, "p_tilde": 1, "Q0": [[1.0]], "A": [[0, 0], [1, 1]]}, "oops": 1})");
  EXPECT_EQ(run("--config " + bad + " analyze").code, 2);
  const auto tiny = write_config(R"({"operator": {"n": 2, "p_tilde": 1, "Q0": [[1.0]], "A": [[0, 0], [1, 1]]},
                                     "gramian": {"t": [1e-13]}})");
  EXPECT_EQ(run("--config " + tiny + " gramian").code, 3);
}
