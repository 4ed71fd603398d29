#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "rnamf/adapter.hpp"
#include "rnamf/config.hpp"
#include "rnamf/error.hpp"
#include "rnamf/io.hpp"
#include "rnamf/problems.hpp"
#include "rnamf/random.hpp"

using namespace rnamf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rnamf_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

MultiFidelityDataset perdikaris_data(std::uint64_t seed) {
  return make_dataset(perdikaris(), nested_design({13, 8}, 1, seed), {});
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

bool have_python() { return std::system("python3 -c 'pass' >/dev/null 2>&1") == 0; }

}  // namespace

TEST(FormatDouble, RoundTrips) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(io::format_double(std::numbers::pi)), std::numbers::pi);
}

TEST(Dataset, JsonRoundTripIsExact) {
  auto data = make_dataset(branin(), nested_design({20, 10, 5}, 2, 3), {1, 2, 5});
  data.bounds = branin().bounds;
  const auto dir = scratch_dir("roundtrip");
  io::save_dataset(dir / "d.json", data);
  const auto back = io::load_dataset(dir / "d.json");
  ASSERT_EQ(back.levels(), 3);
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(back.designs[l], data.designs[l]);
    EXPECT_EQ(back.outputs[l], data.outputs[l]);
  }
  EXPECT_EQ(back.costs, data.costs);
  ASSERT_TRUE(back.bounds.has_value());
  EXPECT_EQ(back.bounds->lower, data.bounds->lower);
  EXPECT_EQ(io::fingerprint(back), io::fingerprint(data));
}

TEST(Dataset, LoadRejectsBadFiles) {
  const auto dir = scratch_dir("bad");
  write_text(dir / "broken.json", "{\"dim\": 1,");
  EXPECT_THROW(io::load_dataset(dir / "broken.json"), ParseError);
  EXPECT_THROW(io::load_dataset(dir / "missing.json"), ParseError);

  auto j = io::dataset_to_json(perdikaris_data(1));
  j["designs"][1][3][0] = 0.123456;
  EXPECT_THROW(io::dataset_from_json(j), DatasetError);

  auto k = io::dataset_to_json(perdikaris_data(1));
  k["colour"] = "red";
  EXPECT_THROW(io::dataset_from_json(k), ParseError);
}

TEST(WriteAtomic, ReplacesWholeFile) {
  const auto dir = scratch_dir("atomic");
  const auto p = dir / "out.txt";
  io::write_atomic(p, std::string(10000, 'a'));
  io::write_atomic(p, "short");
  EXPECT_EQ(io::read_file(p), "short");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  EXPECT_ANY_THROW(io::write_atomic(dir / "no" / "such" / "dir.txt", "x"));
}

TEST(Fingerprint, SensitiveToAnyValue) {
  const auto a = perdikaris_data(2);
  auto b = a;
  EXPECT_EQ(io::fingerprint(a), io::fingerprint(b));
  EXPECT_EQ(io::fingerprint(a).size(), 16u);
  b.outputs[1][0] = std::nextafter(b.outputs[1][0], 1e9);
  EXPECT_NE(io::fingerprint(a), io::fingerprint(b));
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Emulator, JsonRoundTripPredictsIdentically) {
  const auto data = perdikaris_data(3);
  FitOptions opt;
  opt.restarts = 2;
  const auto emu = RnaEmulator::fit(data, KernelKind::Matern25, opt);
  const auto j = io::emulator_to_json(emu);
  const auto back = io::emulator_from_json(io::parse_json(j.dump(), "model"), data);
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    const auto p = emu.predict(Eigen::VectorXd::Constant(1, x), 2);
    const auto q = back.predict(Eigen::VectorXd::Constant(1, x), 2);
    EXPECT_EQ(p.mean, q.mean);
    EXPECT_EQ(p.var, q.var);
  }
  EXPECT_EQ(io::emulator_to_json(back).dump(), j.dump());
}

TEST(Emulator, StaleModelRejected) {
  const auto data = perdikaris_data(4);
  FitOptions opt;
  opt.restarts = 1;
  const auto j = io::emulator_to_json(RnaEmulator::fit(data, KernelKind::SqExp, opt));
  EXPECT_THROW(io::emulator_from_json(j, perdikaris_data(5)), StaleModelError);
}

TEST(RunConfig, ParsesAndRejectsUnknownKeys) {
  const auto c = parse_run_config(io::parse_json(
      R"({"kernel": "matern1.5", "seed": 7, "budget": 80, "costs": [1, 3], "strategy": "ALC",
          "fit": {"restarts": 3}, "alc": {"integration_points": 500, "imputations": 50},
          "benchmark": {"problem": "park", "reps": 4, "mode": "al"}, "outputs": {"emulator": "m.json"}})",
      "config"));
  EXPECT_EQ(c.kernel, KernelKind::Matern15);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.budget, 80.0);
  EXPECT_EQ(*c.costs, (std::vector<double>{1, 3}));
  EXPECT_EQ(c.strategy, Strategy::ALC);
  EXPECT_EQ(c.fit.restarts, 3);
  EXPECT_EQ(c.alc.integration_points, 500);
  EXPECT_EQ(c.benchmark.reps, 4);
  EXPECT_EQ(c.outputs.emulator, "m.json");

  EXPECT_THROW(parse_run_config(io::parse_json(R"({"kernal": "sqexp"})", "c")), ParseError);
  EXPECT_THROW(parse_run_config(io::parse_json(R"({"fit": {"restart": 3}})", "c")), ParseError);
  EXPECT_THROW(parse_run_config(io::parse_json(R"({"budget": -1})", "c")), ParseError);
  EXPECT_THROW(parse_run_config(io::parse_json(R"({"benchmark": {"mode": "fast"}})", "c")), ParseError);

  const auto again = parse_run_config(run_config_to_json(c));
  EXPECT_EQ(run_config_to_json(again).dump(), run_config_to_json(c).dump());
}

class AdapterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!have_python()) GTEST_SKIP() << "python3 not available";
    dir_ = scratch_dir("adapter");
    write_text(dir_ / "sim.py",
               "import json, math, sys\n"
               "q = json.loads(sys.stdin.readline())\n"
               "x = q['x'][0]\n"
               "f1 = math.sin(8 * math.pi * x)\n"
               "y = f1 if q['level'] == 1 else (x - math.sqrt(2)) * f1 * f1\n"
               "print(json.dumps({'y': y}))\n");
  }
  std::string sim() const { return "python3 " + (dir_ / "sim.py").string(); }
  fs::path dir_;
};

TEST_F(AdapterTest, MatchesBuiltinProblem) {
  const AdapterSpec spec{sim(), 30.0};
  for (double x : {0.0, 0.1, 1.0 / 3, 0.9}) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
    for (int l = 1; l <= 2; ++l) EXPECT_NEAR(run_adapter(spec, l, v), perdikaris().evaluate(l, v), 1e-14);
  }
}

TEST_F(AdapterTest, FailuresAreAdapterErrors) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_THROW(run_adapter({"sleep 5", 0.3}, 1, x), AdapterError);
  EXPECT_THROW(run_adapter({"exit 3", 5.0}, 1, x), AdapterError);
  EXPECT_THROW(run_adapter({"echo hello", 5.0}, 1, x), AdapterError);
  EXPECT_THROW(run_adapter({"echo '{\"z\": 1}'", 5.0}, 1, x), AdapterError);
  EXPECT_THROW(run_adapter({"", 5.0}, 1, x), AdapterError);
}

TEST_F(AdapterTest, CacheCountsInvocations) {
  CachedSimulator s({AdapterSpec{sim(), 30.0}});
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.2), b = Eigen::VectorXd::Constant(1, 0.7);
  const double ya = s(1, a);
  EXPECT_EQ(s(1, a), ya);
  s(2, a);
  s(1, b);
  EXPECT_EQ(s.invocations(), 3u);
  EXPECT_EQ(s.hits(), 1u);
  s.save(dir_ / "cache.json");

  CachedSimulator t({AdapterSpec{"exit 1", 5.0}});
  t.load(dir_ / "cache.json");
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t(1, a), ya);
  EXPECT_EQ(t.invocations(), 0u);
  EXPECT_THROW(t(1, Eigen::VectorXd::Constant(1, 0.21)), AdapterError);
  t.load(dir_ / "nothing.json");
  EXPECT_EQ(t.size(), 3u);
}
