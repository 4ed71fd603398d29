#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rnamf::cli {

struct DesignArgs {
  std::string problem;
  int dim = 0;
  std::vector<long> sizes;
  std::vector<double> costs;
  std::uint64_t seed = 0;
  std::string output;
};

struct FitArgs {
  std::string dataset;
  std::string config;
  std::optional<std::string> kernel;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string report;
};

struct PredictArgs {
  std::string emulator;
  std::string dataset;
  std::string points;
  int grid = 0;
  int mc_samples = 10000;
  std::string output;
};

struct AlArgs {
  std::string dataset;
  std::string config;
  std::string builtin;
  std::vector<std::string> adapters;
  std::optional<std::string> strategy;
  std::optional<double> budget;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string trace;
  std::string cache;
  int test_points = 1000;
};

struct BenchmarkArgs {
  std::string config;
  std::string problem;
  std::optional<int> reps;
  std::optional<int> jobs;
  std::string results;
  std::string summary;
  std::string curves;
  std::string svg;
  bool quiet = false;
};

int cmd_design(const DesignArgs& a);
int cmd_validate(const std::string& dataset);
int cmd_fit(const FitArgs& a);
int cmd_predict(const PredictArgs& a);
int cmd_al(const AlArgs& a);
int cmd_benchmark(const BenchmarkArgs& a);

// Rows of a CSV (optional non-numeric header line) or JSON array-of-arrays file.
Eigen::MatrixXd read_points(const std::string& path, int dim);

}  // namespace rnamf::cli
