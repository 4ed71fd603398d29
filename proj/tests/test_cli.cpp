#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rnamf/io.hpp"

using namespace rnamf;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = RNAMF_CLI_PATH;
const fs::path kData = RNAMF_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rnamf_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path at(const std::string& name) const { return dir_ / name; }

  Outcome run(const std::string& args) const {
    const std::string cmd = kCli.string() + " " + args + " >" + at("stdout").string() + " 2>" + at("stderr").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(at("stdout")), slurp(at("stderr"))};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(at(name)) << text; }

  fs::path dir_;
};

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(Cli, ShippedDatasetValidates) {
  const auto r = run("validate " + (kData / "perdikaris.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::parse_json(r.out, "stdout");
  EXPECT_EQ(j["levels"], 2);
  EXPECT_EQ(j["sizes"][0], 13);
  EXPECT_EQ(j["sizes"][1], 8);
}

TEST_F(Cli, DesignFitPredictRoundTrip) {
  ASSERT_EQ(run("design --problem branin --sizes 20,10,5 --seed 3 -o " + at("d.json").string()).code, 0);
  auto r = run("fit " + at("d.json").string() + " --kernel matern25 --seed 1 -o " + at("m.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = io::parse_json(r.out, "report");
  EXPECT_EQ(report["levels"], 3);
  EXPECT_EQ(report["level_models"].size(), 3u);

  write("pts.csv", "x1,x2\n0.5,7.5\n-2,3\n");
  r = run("predict " + at("m.json").string() + " --points " + at("pts.csv").string() + " --mc-samples 2000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "x_1,x_2,mean,var,V_1,V_2,V_3");
  EXPECT_EQ(count_lines(r.out), 3);

  const auto data = io::load_dataset(at("d.json"));
  const auto emu = io::emulator_from_json(io::parse_json(slurp(at("m.json")), "model"), data);
  const auto pm = emu.predict(Eigen::Vector2d(0.5, 7.5), 3);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::istringstream cells(row);
  std::string cell;
  std::vector<double> v;
  while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v[2], pm.mean);
  EXPECT_EQ(v[3], pm.var);

  write("pts.json", "[[0.5, 7.5]]");
  r = run("predict " + at("m.json").string() + " --points " + at("pts.json").string() + " --mc-samples 2000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(row), std::string::npos);
}

TEST_F(Cli, RefitIsByteIdentical) {
  ASSERT_EQ(run("design --problem perdikaris --seed 2 -o " + at("d.json").string()).code, 0);
  ASSERT_EQ(run("fit " + at("d.json").string() + " --seed 4 -o " + at("a.json").string()).code, 0);
  ASSERT_EQ(run("fit " + at("d.json").string() + " --seed 4 -o " + at("b.json").string()).code, 0);
  EXPECT_EQ(slurp(at("a.json")), slurp(at("b.json")));
}

TEST_F(Cli, EmptyPointsFileGivesHeaderOnly) {
  ASSERT_EQ(run("fit " + (kData / "perdikaris.json").string() + " -o " + at("m.json").string()).code, 0);
  write("empty.csv", "");
  const auto r = run("predict " + at("m.json").string() + " --points " + at("empty.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "x_1,mean,var,V_1,V_2\n");
}

TEST_F(Cli, GridPrediction) {
  ASSERT_EQ(run("fit " + (kData / "perdikaris.json").string() + " -o " + at("m.json").string()).code, 0);
  const auto r = run("predict " + at("m.json").string() + " --grid 11 -o " + at("p.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(at("p.csv"))), 12);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("design").code, 1);
  EXPECT_EQ(run("design --problem nope").code, 1);
  const auto r = run("fit " + (kData / "perdikaris.json").string());
  EXPECT_EQ(r.code, 1);
  const auto j = io::parse_json(r.err, "stderr");
  EXPECT_EQ(j["error"]["kind"], "argument");
  EXPECT_EQ(j["error"]["exit_code"], 1);
}

TEST_F(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(run("validate " + at("missing.json").string()).code, 2);
  write("broken.json", "{\"dim\": 1");
  EXPECT_EQ(run("validate " + at("broken.json").string()).code, 2);

  auto j = io::parse_json(slurp(kData / "perdikaris.json"), "data");
  j["designs"][1][2][0] = 0.4242;
  write("nonnested.json", j.dump());
  const auto r = run("validate " + at("nonnested.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(io::parse_json(r.err, "stderr")["error"]["kind"], "dataset");

  ASSERT_EQ(run("fit " + (kData / "perdikaris.json").string() + " -o " + at("m.json").string()).code, 0);
  ASSERT_EQ(run("design --problem perdikaris --seed 9 -o " + at("other.json").string()).code, 0);
  const auto stale = run("predict " + at("m.json").string() + " --dataset " + at("other.json").string() + " --grid 3");
  EXPECT_EQ(stale.code, 2);
  EXPECT_EQ(io::parse_json(stale.err, "stderr")["error"]["kind"], "stale_model");

  write("bad.csv", "0.1,0.2\n");
  EXPECT_EQ(run("predict " + at("m.json").string() + " --points " + at("bad.csv").string()).code, 2);
  write("cfg.json", "{\"kernal\": \"sqexp\"}");
  EXPECT_EQ(run("fit " + (kData / "perdikaris.json").string() + " -c " + at("cfg.json").string() + " -o " +
                at("m2.json").string())
                .code,
            2);
}

TEST_F(Cli, AdapterFailureExitsThreeWithPartialTrace) {
  const auto r = run("al " + (kData / "perdikaris.json").string() + " --adapter 'exit 4' --budget 5 --strategy ALM" +
                     " --trace " + at("trace.csv").string() + " -o " + at("out.json").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(io::parse_json(r.err, "stderr")["error"]["kind"], "adapter");
  EXPECT_TRUE(fs::exists(at("trace.csv")));
}

TEST_F(Cli, BuiltinActiveLearningRun) {
  const auto r = run("al " + (kData / "perdikaris.json").string() +
                     " --builtin perdikaris --budget 9 --strategy ALM --seed 2 --test-points 100" + " --trace " +
                     at("trace.csv").string() + " -o " + at("out.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto data = io::load_dataset(at("out.json"));
  EXPECT_GT(data.size(1), 13);
  const std::string trace = slurp(at("trace.csv"));
  EXPECT_GE(count_lines(trace), 3);
  EXPECT_NE(trace.substr(0, trace.find('\n')).find("accrued_cost"), std::string::npos);
}

TEST_F(Cli, BenchmarkWritesResultsAndSummary) {
  const auto r = run("benchmark --problem perdikaris --reps 2 -q --results " + at("r.csv").string() + " --summary " +
                     at("s.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(at("r.csv"))), 5);
  const auto s = io::parse_json(slurp(at("s.json")), "summary");
  EXPECT_TRUE(s.is_object());
  EXPECT_EQ(run("benchmark --problem perdikaris --reps 0 --results x --summary y").code, 1);
}

TEST_F(Cli, ZeroBudgetGivesEmptyTrace) {
  const auto r = run("al " + (kData / "perdikaris.json").string() + " --builtin perdikaris --budget 0 --trace " +
                     at("t.csv").string() + " -o " + at("o.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(at("t.csv"))), 1);
  EXPECT_EQ(io::fingerprint(io::load_dataset(at("o.json"))), io::fingerprint(io::load_dataset(kData / "perdikaris.json")));
}

TEST_F(Cli, NonJsonAdapterExitsThree) {
  const auto r = run("al " + (kData / "perdikaris.json").string() + " --adapter 'echo hello' --budget 3 --strategy ALM" +
                     " --trace " + at("t.csv").string() + " -o " + at("o.json").string());
  EXPECT_EQ(r.code, 3);
}

TEST_F(Cli, GridMatchesLibraryPrediction) {
  ASSERT_EQ(run("fit " + (kData / "perdikaris.json").string() + " -o " + at("m.json").string()).code, 0);
  ASSERT_EQ(run("predict " + at("m.json").string() + " --grid 401 -o " + at("g.csv").string()).code, 0);
  const auto data = io::load_dataset(kData / "perdikaris.json");
  const auto emu = io::emulator_from_json(io::parse_json(slurp(at("m.json")), "model"), data);
  std::istringstream in(slurp(at("g.csv")));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_NEAR(v[0], rows / 400.0, 1e-15);
    const auto pm = emu.predict(Eigen::VectorXd::Constant(1, v[0]), 2);
    EXPECT_EQ(v[1], pm.mean);
    EXPECT_EQ(v[2], pm.var);
    EXPECT_NEAR(v[3] + v[4], v[2], 1e-12 * std::max(1.0, v[2]));
    ++rows;
  }
  EXPECT_EQ(rows, 401);
}
